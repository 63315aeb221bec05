#include "specgal_tools/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "specgal/anomalous.hpp"
#include "specgal/errors.hpp"
#include "specgal/hyperbolic.hpp"
#include "specgal/parabolic.hpp"
#include "specgal/stochastic.hpp"

#ifndef SPECGAL_SCENARIO_DIR
#define SPECGAL_SCENARIO_DIR "scenarios"
#endif

namespace specgal::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string ScenarioConfig::name() const { return tree.get<std::string>("scenario.name", path.stem().string()); }
std::string ScenarioConfig::kind() const { return tree.get<std::string>("scenario.kind", ""); }
std::string ScenarioConfig::description() const { return tree.get<std::string>("scenario.description", ""); }

ScenarioConfig parse_scenario(std::string text, fs::path origin) {
  ScenarioConfig cfg;
  cfg.path = std::move(origin);
  cfg.text = std::move(text);
  std::istringstream in(cfg.text);
  try {
    pt::read_ini(in, cfg.tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream os;
    os << (cfg.path.empty() ? std::string("<config>") : cfg.path.string()) << ":" << e.line()
       << ": " << e.message();
    throw ConfigurationError(os.str());
  }
  return cfg;
}

ScenarioConfig load_scenario(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

namespace {

// ---------------------------------------------------------------------------
// Config access with issue collection

class Reader {
 public:
  Reader(const pt::ptree& tree, std::vector<std::string>& issues) : tree_(tree), issues_(issues) {}

  void issue(const std::string& key, const std::string& msg) { issues_.push_back(key + ": " + msg); }
  bool ok() const { return issues_.empty(); }
  std::size_t issue_count() const { return issues_.size(); }

  bool has(const std::string& key) const { return static_cast<bool>(tree_.get_optional<std::string>(key)); }

  std::string str(const std::string& key, const std::string& def) const {
    return tree_.get<std::string>(key, def);
  }

  double num(const std::string& key, double def) {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return def;
    return parse_double(key, *raw, def);
  }

  double required(const std::string& key) {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) {
      issue(key, "missing required value");
      return std::numeric_limits<double>::quiet_NaN();
    }
    return parse_double(key, *raw, std::numeric_limits<double>::quiet_NaN());
  }

  long integer(const std::string& key, long def) {
    const double v = num(key, static_cast<double>(def));
    if (!std::isfinite(v) || v != std::floor(v)) {
      issue(key, "expected an integer");
      return def;
    }
    return static_cast<long>(v);
  }

 private:
  double parse_double(const std::string& key, const std::string& raw, double def) {
    try {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (raw.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      issue(key, "not a number: '" + raw + "'");
      return def;
    }
  }

  const pt::ptree& tree_;
  std::vector<std::string>& issues_;
};

// ---------------------------------------------------------------------------
// Output tables

struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<double> values) {
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values) row.push_back(format_number(v));
    rows.push_back(std::move(row));
  }
  void add_kv(const std::string& key, double value) { rows.push_back({key, format_number(value)}); }
  void add_kv(const std::string& key, const std::string& value) { rows.push_back({key, value}); }
};

std::string render(const Table& t) {
  std::ostringstream os;
  for (const auto& c : t.comments) os << "# " << c << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

Table key_value_table() {
  Table t;
  t.columns = {"quantity", "value"};
  return t;
}

struct Outputs {
  Table series;
  Table report;
};

using Runner = std::function<Outputs()>;

// ---------------------------------------------------------------------------
// Shared builders

struct Settings {
  const RunOptions* options;
  std::uint64_t seed(Reader& r, const std::string& key, long def = 0) const {
    if (options->seed_override) return *options->seed_override;
    const long s = r.integer(key, def);
    if (s < 0) r.issue(key, "seed must be >= 0");
    return static_cast<std::uint64_t>(std::max(0L, s));
  }
};

BasisPtr read_basis(Reader& r, std::optional<DomainKind> required_kind = std::nullopt) {
  const std::size_t before = r.issue_count();
  BasisSpec spec;
  const std::string boundary = r.str("domain.boundary", "dirichlet");
  if (boundary == "dirichlet") {
    spec.kind = DomainKind::kDirichletCube;
  } else if (boundary == "periodic") {
    spec.kind = DomainKind::kPeriodicTorus;
  } else {
    r.issue("domain.boundary", "expected 'dirichlet' or 'periodic', got '" + boundary + "'");
  }
  if (required_kind && spec.kind != *required_kind) {
    r.issue("domain.boundary", std::string("this scenario kind needs a ") +
                                   (*required_kind == DomainKind::kPeriodicTorus ? "periodic" : "dirichlet") +
                                   " domain");
  }
  spec.side_length = r.num("domain.side_length", 1.0);
  if (!(spec.side_length > 0.0) || !std::isfinite(spec.side_length)) {
    r.issue("domain.side_length", "must be a finite length > 0");
  }
  spec.dimension = static_cast<int>(r.integer("domain.dimension", 1));
  if (spec.dimension < 1 || spec.dimension > 3) r.issue("domain.dimension", "must be 1, 2 or 3");
  spec.modes_per_axis = static_cast<int>(r.integer("domain.modes", 1));
  if (spec.modes_per_axis < 1) r.issue("domain.modes", "must be >= 1");
  if (spec.dimension >= 1 && spec.dimension <= 3 && spec.modes_per_axis >= 1 &&
      std::pow(spec.modes_per_axis, spec.dimension) > 4096) {
    r.issue("domain.modes", "more than 4096 modes in total");
  }
  if (r.issue_count() != before) return nullptr;
  return build_basis(spec);
}

std::optional<NonlinearityProfile> read_profile(Reader& r) {
  const std::size_t before = r.issue_count();
  const std::string kind = r.str("nonlinearity.profile", "linear");
  ClampInterval clamp;
  clamp.lo = r.num("nonlinearity.clamp_min", clamp.lo);
  clamp.hi = r.num("nonlinearity.clamp_max", clamp.hi);
  if (!(clamp.lo < clamp.hi)) r.issue("nonlinearity.clamp_min", "clamp interval is empty");
  try {
    if (kind == "linear") {
      const double c = r.num("nonlinearity.c", 1.0);
      if (!(c > 0.0)) r.issue("nonlinearity.c", "must be > 0");
      if (r.issue_count() != before) return std::nullopt;
      return make_linear_profile(c, clamp);
    }
    if (kind == "exponential") {
      const double k0 = r.num("nonlinearity.k0", 1.0);
      if (!(k0 > 0.0)) r.issue("nonlinearity.k0", "must be > 0");
      if (r.issue_count() != before) return std::nullopt;
      return make_exponential_profile(k0, clamp);
    }
    if (kind == "power") {
      PorousMediumParams p;
      p.gamma = r.num("nonlinearity.gamma", p.gamma);
      p.c = r.num("nonlinearity.c", p.c);
      p.k = r.num("nonlinearity.k", p.k);
      p.epsilon = r.num("nonlinearity.epsilon", p.epsilon);
      p.saturation = r.num("nonlinearity.saturation", p.saturation);
      if (!(p.gamma > 0.0)) r.issue("nonlinearity.gamma", "must be > 0");
      if (!(p.c > 0.0)) r.issue("nonlinearity.c", "must be > 0");
      if (!(p.k > 0.0)) r.issue("nonlinearity.k", "must be > 0");
      if (!(p.epsilon > 0.0)) r.issue("nonlinearity.epsilon", "must be > 0");
      if (!(p.saturation > 0.0)) r.issue("nonlinearity.saturation", "must be > 0");
      if (r.issue_count() != before) return std::nullopt;
      return make_regularized_power_profile(p);
    }
  } catch (const Error& e) {
    r.issue("nonlinearity", e.what());
    return std::nullopt;
  }
  r.issue("nonlinearity.profile", "expected linear, exponential or power, got '" + kind + "'");
  return std::nullopt;
}

// mu_i = amplitude (1 + lambda_i)^(-decay). On the unbounded mode set the
// trace converges iff decay > D/2; that is the trace-class gate.
std::optional<Eigen::MatrixXd> read_kernel(Reader& r, const BasisPtr& basis, const std::string& sec) {
  const std::size_t before = r.issue_count();
  const double amplitude = r.num(sec + ".amplitude", 1.0);
  const double decay = r.num(sec + ".decay", 2.0);
  const double ceiling = r.num(sec + ".trace_ceiling", 1e6);
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) r.issue(sec + ".amplitude", "must be finite and >= 0");
  if (!basis) return std::nullopt;
  const int d = basis->dimension();
  if (!(decay > d / 2.0)) {
    std::ostringstream os;
    os << "trace-class gate: kernel trace sum (1+lambda)^(-" << decay
       << ") diverges unless decay > D/2 = " << d / 2.0;
    r.issue(sec + ".decay", os.str());
  }
  if (r.issue_count() != before) return std::nullopt;
  Eigen::VectorXd mu(static_cast<Eigen::Index>(basis->size()));
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    mu[i] = amplitude * std::pow(1.0 + basis->eigenvalue(static_cast<std::size_t>(i)), -decay);
  }
  const KernelSpec spec = KernelSpec::from_diagonal(basis, mu);
  try {
    trace_of_kernel(spec, ceiling);
  } catch (const KernelError& e) {
    r.issue(sec + ".trace_ceiling", std::string("trace-class gate: ") + e.what());
    return std::nullopt;
  }
  return kernel_spectral_coeffs(spec);
}

// Initial data: a single scaled mode, zero, or a Gaussian draw.
std::optional<Eigen::VectorXd> read_field(Reader& r, const BasisPtr& basis, const std::string& sec,
                                          const Settings& settings, const std::string& def_kind) {
  if (!basis) return std::nullopt;
  const std::string kind = r.str(sec + ".kind", def_kind);
  const auto n = static_cast<Eigen::Index>(basis->size());
  if (kind == "zero") return Eigen::VectorXd::Zero(n);
  if (kind == "mode") {
    const long mode = r.integer(sec + ".mode", 0);
    const double amplitude = r.num(sec + ".amplitude", 1.0);
    if (mode < 0 || mode >= n) {
      r.issue(sec + ".mode", "mode index outside the basis (size " + std::to_string(n) + ")");
      return std::nullopt;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    c[mode] = amplitude;
    return c;
  }
  if (kind == "random") {
    const auto k = read_kernel(r, basis, sec);
    const std::uint64_t seed = settings.seed(r, sec + ".seed");
    if (!k) return std::nullopt;
    return GaussianSampler(basis, *k).sample(seed).coeffs;
  }
  r.issue(sec + ".kind", "expected zero, mode or random, got '" + kind + "'");
  return std::nullopt;
}

struct TimeGrid {
  double horizon = 1.0;
  std::vector<double> times;
  StepControl control;
};

TimeGrid read_time(Reader& r, const RunOptions& options) {
  TimeGrid tg;
  tg.horizon = r.num("time.horizon", 1.0);
  const long intervals = r.integer("time.intervals", 100);
  if (!(tg.horizon > 0.0) || !std::isfinite(tg.horizon)) r.issue("time.horizon", "must be finite and > 0");
  if (intervals < 1) r.issue("time.intervals", "must be >= 1");
  tg.control.rtol = r.num("time.rtol", tg.control.rtol) * options.tolerance_scale;
  tg.control.atol = r.num("time.atol", tg.control.atol) * options.tolerance_scale;
  if (!(tg.control.rtol > 0.0)) r.issue("time.rtol", "must be > 0");
  if (!(tg.control.atol > 0.0)) r.issue("time.atol", "must be > 0");
  if (tg.horizon > 0.0 && intervals >= 1) tg.times = uniform_times(tg.horizon, static_cast<std::size_t>(intervals));
  return tg;
}

std::optional<ParabolicProblem> read_parabolic(Reader& r, const BasisPtr& basis,
                                               const std::optional<NonlinearityProfile>& profile,
                                               const TimeGrid& tg) {
  const double a_scale = r.num("operator.a_scale", 1.0);
  const double cutoff = r.num("operator.cutoff", std::numeric_limits<double>::infinity());
  const double forcing = r.num("forcing.mode0", 0.0);
  if (!(a_scale >= 0.0) || !std::isfinite(a_scale)) r.issue("operator.a_scale", "must be finite and >= 0");
  if (!(cutoff > 0.0)) r.issue("operator.cutoff", "must be > 0");
  if (!std::isfinite(forcing)) r.issue("forcing.mode0", "must be finite");
  if (!basis || !profile) return std::nullopt;
  ParabolicProblem p;
  p.basis = basis;
  p.a_multiplier = [a_scale](double lambda) { return a_scale * lambda; };
  p.profile = *profile;
  if (forcing != 0.0) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
    f[0] = forcing;
    p.forcing = constant_forcing(f);
  }
  p.cutoff = cutoff;
  p.horizon = tg.horizon;
  return p;
}

AuditOptions read_audit(Reader& r, const TimeGrid& tg) {
  AuditOptions a;
  a.p = static_cast<int>(r.integer("audit.p", 0));
  if (a.p < 0) r.issue("audit.p", "must be >= 1 (or 0 for the default)");
  a.rtol = tg.control.rtol;
  a.atol = tg.control.atol;
  a.tolerance_factor = r.num("audit.tolerance_factor", a.tolerance_factor);
  return a;
}

// a_p = gamma - 1/(2p) must be positive for the Gronwall ceiling.
void check_gronwall(Reader& r, const ParabolicModel& model, const AuditOptions& audit) {
  const double gamma = audit_coercivity(model);
  if (!(gamma > 0.0)) {
    r.issue("operator.a_scale", "energy audit needs positive coercivity, got " + format_number(gamma));
    return;
  }
  const int p = audit.p > 0 ? audit.p : default_gronwall_p(gamma);
  const double a_p = gamma - 1.0 / (2.0 * p);
  if (!(a_p > 0.0)) {
    r.issue("audit.p", "a_p = gamma - 1/(2p) = " + format_number(a_p) + " <= 0 (gamma = " +
                           format_number(gamma) + ", p = " + std::to_string(p) + ")");
  }
}

void check_alpha_gate(Reader& r, const std::string& key, double alpha, int dimension) {
  if (!(alpha > 0.0)) {
    r.issue(key, "must be > 0");
    return;
  }
  if (!(4.0 * alpha > dimension)) {
    r.issue(key, "admissibility requires alpha > D/4 (alpha = " + format_number(alpha) +
                     ", D = " + std::to_string(dimension) + ")");
  }
}

double grid_norm_sq(const GridSpec& grid, const Eigen::VectorXd& values) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unflatten(i);
    double w = 1.0;
    for (int a = 0; a < grid.dimension; ++a) w *= grid.weight(idx[static_cast<std::size_t>(a)]);
    s += w * values[static_cast<Eigen::Index>(i)] * values[static_cast<Eigen::Index>(i)];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Scenario kinds

Runner plan_parabolic(Reader& r, const Settings& s, bool porous) {
  const BasisPtr basis = read_basis(r, DomainKind::kDirichletCube);
  const auto profile = read_profile(r);
  if (porous && profile && profile->kind() != ProfileKind::kRegularizedPower) {
    r.issue("nonlinearity.profile", "porous-medium scenarios use the power profile");
  }
  const TimeGrid tg = read_time(r, *s.options);
  const auto g = read_field(r, basis, "initial", s, "random");
  const auto problem = read_parabolic(r, basis, profile, tg);
  const AuditOptions audit = read_audit(r, tg);
  if (!problem || !g || !r.ok()) return {};
  auto model = std::make_shared<ParabolicModel>(*problem);
  check_gronwall(r, *model, audit);
  if (!r.ok()) return {};

  return [model, g = *g, tg, audit, problem = *problem]() {
    const TrajectorySample traj =
        integrate_parabolic(*model, SpectralField(problem.basis, g), tg.control, tg.times);
    const EnergyReport rep = energy_audit(traj, problem, audit);
    Outputs out;
    out.series.comments = {
        "Galerkin energy audit of dU/dt = -A U + Lap F(U) + f",
        "norm_sq: ||U||^2; dissipation: (AU,U); nonlinear_dissipation: quadrature of F'(U)|grad U|^2",
        "inequality_residual: 1/2 d||U||^2/dt + a_p ||U||^2 - (p/2)||f||^2 (<= tolerance expected)",
        "bound: Gronwall ceiling M on sup ||U||^2; violated: 1 when residual > tolerance",
    };
    out.series.columns = {"t", "norm_sq", "dissipation", "nonlinear_dissipation", "forcing_work",
                          "forcing_norm_sq", "half_ddt_norm_sq", "inequality_residual", "tolerance",
                          "bound", "violated"};
    for (const auto& e : rep.samples) {
      out.series.add({e.t, e.norm_sq, e.dissipation, e.nonlinear_dissipation, e.forcing_work,
                      e.forcing_norm_sq, e.half_ddt_norm_sq, e.inequality_residual, e.tolerance,
                      rep.bound, e.violated ? 1.0 : 0.0});
    }
    out.report = key_value_table();
    out.report.comments = {"summary of the energy audit and Gronwall ceiling"};
    out.report.add_kv("modes", static_cast<double>(problem.basis->size()));
    out.report.add_kv("profile", problem.profile.describe());
    out.report.add_kv("gamma", rep.gamma);
    out.report.add_kv("p", rep.p);
    out.report.add_kv("a_p", rep.a_p);
    out.report.add_kv("bound", rep.bound);
    out.report.add_kv("sup_norm_sq", rep.sup_norm_sq);
    out.report.add_kv("bound_holds", rep.bound_holds ? 1.0 : 0.0);
    out.report.add_kv("violations", static_cast<double>(rep.violations));
    out.report.add_kv("accepted_steps", static_cast<double>(traj.accepted_steps));
    return out;
  };
}

Runner plan_hyperbolic(Reader& r, const Settings& s) {
  const BasisPtr basis = read_basis(r, DomainKind::kDirichletCube);
  const auto profile = read_profile(r);
  const TimeGrid tg = read_time(r, *s.options);
  const auto u0 = read_field(r, basis, "initial", s, "random");
  const auto v0 = read_field(r, basis, "velocity", s, "zero");
  const auto spatial = read_parabolic(r, basis, profile, tg);
  const double nu = r.num("wave.damping", 0.0);
  if (!(nu >= 0.0) || !std::isfinite(nu)) r.issue("wave.damping", "must be finite and >= 0");
  const AuditOptions audit = read_audit(r, tg);
  if (!spatial || !u0 || !v0 || !r.ok()) return {};
  HyperbolicProblem hp;
  hp.basis = basis;
  hp.a_multiplier = spatial->a_multiplier;
  hp.damping = nu;
  hp.profile = spatial->profile;
  hp.forcing = spatial->forcing;
  hp.cutoff = spatial->cutoff;
  hp.horizon = tg.horizon;

  return [hp, u0 = *u0, v0 = *v0, tg, audit]() {
    const WaveState init{SpectralField(hp.basis, u0), SpectralField(hp.basis, v0)};
    const WaveTrajectory traj = integrate_wave(hp, init, tg.control, tg.times);
    const WaveEnergyReport rep = wave_energy_audit(traj, hp, audit);
    Outputs out;
    out.series.comments = {
        "damped nonlinear wave U'' + nu U' + A U = Lap F(U') + f",
        "energy: ||U'||^2 + (AU,U); increment_residual: E(t_k) - E(t_{k-1}) minus the forcing allowance",
        "bound: ceiling M = E(0) + (1/(2 nu)) int ||f||^2; violated: 1 when the increment exceeds tolerance",
    };
    out.series.columns = {"t", "energy", "velocity_norm_sq", "position_norm_sq", "potential",
                          "damping_dissipation", "forcing_norm_sq", "increment_residual", "bound",
                          "violated"};
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
      const auto& e = rep.samples[i];
      const double resid = (i > 0 && i - 1 < rep.increment_residuals.size()) ? rep.increment_residuals[i - 1] : 0.0;
      const bool bad = i > 0 && i - 1 < rep.interval_violations.size() && rep.interval_violations[i - 1];
      out.series.add({e.t, e.energy, e.velocity_norm_sq, e.position_norm_sq, e.potential,
                      e.damping_dissipation, e.forcing_norm_sq, resid, rep.bound, bad ? 1.0 : 0.0});
    }
    out.report = key_value_table();
    out.report.comments = {"summary of the wave energy audit"};
    out.report.add_kv("damping", hp.damping);
    out.report.add_kv("bound_applicable", rep.bound_applicable ? 1.0 : 0.0);
    out.report.add_kv("bound", rep.bound);
    out.report.add_kv("sup_velocity_sq", rep.sup_velocity_sq);
    out.report.add_kv("sup_position_sq", rep.sup_position_sq);
    out.report.add_kv("position_bound", rep.position_bound);
    out.report.add_kv("velocity_bound_holds", rep.velocity_bound_holds ? 1.0 : 0.0);
    out.report.add_kv("position_bound_holds", rep.position_bound_holds ? 1.0 : 0.0);
    out.report.add_kv("velocity_integral", rep.velocity_integral);
    out.report.add_kv("integral_bound_holds", rep.integral_bound_holds ? 1.0 : 0.0);
    out.report.add_kv("violations", static_cast<double>(rep.violations));
    out.report.add_kv("velocity_consistency", velocity_consistency(traj));
    return out;
  };
}

Runner plan_ensemble(Reader& r, const Settings& s) {
  const BasisPtr basis = read_basis(r, DomainKind::kDirichletCube);
  const auto profile = read_profile(r);
  const TimeGrid tg = read_time(r, *s.options);
  const auto problem = read_parabolic(r, basis, profile, tg);
  const auto kernel = basis ? read_kernel(r, basis, "initial") : std::nullopt;
  const std::uint64_t seed = s.seed(r, "initial.seed");
  const long members = r.integer("ensemble.members", 256);
  const long probes = r.integer("ensemble.probes", 4);
  const std::uint64_t probe_seed = s.seed(r, "ensemble.probe_seed", 1);
  const double probe_scale = r.num("ensemble.probe_scale", 1.0);
  if (members < 2) r.issue("ensemble.members", "must be >= 2");
  if (probes < 1) r.issue("ensemble.probes", "must be >= 1");
  if (!(probe_scale >= 0.0)) r.issue("ensemble.probe_scale", "must be >= 0");
  if (!problem || !kernel || !r.ok()) return {};
  const unsigned workers = s.options->workers;

  return [problem = *problem, kernel = *kernel, seed, members, probes, probe_seed, probe_scale, tg,
          workers]() {
    const GaussianSampler sampler(problem.basis, kernel);
    EnsembleConfig cfg;
    cfg.members = static_cast<std::size_t>(members);
    cfg.base_seed = seed;
    cfg.times = tg.times;
    cfg.control = tg.control;
    cfg.workers = workers;
    const Ensemble ens = run_ensemble(problem, sampler, cfg);

    const std::size_t intervals = ens.times.size() - 1;
    const std::size_t n = problem.basis->size();
    std::vector<CharacteristicProbe> plist;
    plist.push_back(CharacteristicProbe::zero(intervals, n));
    auto rng = make_member_rng(probe_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (long p = 1; p < probes; ++p) {
      CharacteristicProbe pr = CharacteristicProbe::zero(intervals, n);
      Eigen::VectorXd dir(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = probe_scale * normal(rng);
      for (auto& j : pr.j) j = dir;
      plist.push_back(std::move(pr));
    }
    std::array<double, 3> centre{};
    for (int a = 0; a < problem.basis->dimension(); ++a) centre[static_cast<std::size_t>(a)] = 0.5 * problem.basis->side_length();
    std::vector<TwoPointQuery> queries;
    for (double t : ens.times) queries.push_back({centre, centre, t});
    const MomentReport mom = moment_report(ens, queries, plist);

    Outputs out;
    out.series.comments = {
        "Monte Carlo moments over Gaussian initial data",
        "mean_norm_sq: ||E U(t)||^2 in coefficients; centre_variance: sample variance of U(x0,t) at the domain centre",
    };
    out.series.columns = {"t", "mean_norm_sq", "centre_variance", "centre_variance_stderr"};
    for (std::size_t k = 0; k < ens.times.size(); ++k) {
      out.series.add({ens.times[k], mom.mean[k].squaredNorm(), mom.covariances[k].value,
                      mom.covariances[k].stderr});
    }
    out.report.comments = {
        "characteristic functional Z[j] = E exp(i int <j, U> dt); probe 0 is j = 0",
        "members: " + std::to_string(ens.size()) + "; failed: " + std::to_string(ens.failed_seeds.size()),
    };
    out.report.columns = {"probe", "z_real", "z_imag", "stderr_real", "stderr_imag", "modulus"};
    for (std::size_t p = 0; p < mom.characteristic.size(); ++p) {
      const auto& z = mom.characteristic[p];
      out.report.add({static_cast<double>(p), z.value.real(), z.value.imag(), z.stderr_real,
                      z.stderr_imag, std::abs(z.value)});
    }
    return out;
  };
}

Runner plan_anomalous(Reader& r, const Settings& s) {
  const BasisPtr basis = read_basis(r, DomainKind::kPeriodicTorus);
  const auto profile = read_profile(r);
  const TimeGrid tg = read_time(r, *s.options);
  const auto u0 = read_field(r, basis, "initial", s, "random");
  FractionalOperatorSpec spec;
  spec.alpha = r.num("anomalous.alpha", 1.0);
  spec.d0 = r.num("anomalous.d0", 1.0);
  spec.coupling = r.num("anomalous.coupling", 0.0);
  const double v0 = r.num("anomalous.v0", 0.0);
  const double v_coupling = r.num("anomalous.potential_coupling", 0.0);
  const long steps = r.integer("anomalous.steps_per_interval", 4);
  if (!(spec.d0 > 0.0)) r.issue("anomalous.d0", "must be > 0");
  if (!std::isfinite(spec.coupling)) r.issue("anomalous.coupling", "must be finite");
  if (!(v0 >= 0.0)) r.issue("anomalous.v0", "must be >= 0");
  if (!(v_coupling >= 0.0)) r.issue("anomalous.potential_coupling", "must be >= 0");
  if (steps < 1) r.issue("anomalous.steps_per_interval", "must be >= 1");
  if (basis) check_alpha_gate(r, "anomalous.alpha", spec.alpha, basis->dimension());
  std::optional<Eigen::MatrixXd> noise;
  std::uint64_t noise_seed = 0;
  if (v0 > 0.0 && basis) {
    noise = read_kernel(r, basis, "noise");
    noise_seed = s.seed(r, "noise.seed", 1);
  }
  if (!basis || !profile || !u0 || !r.ok()) return {};

  return [basis, profile = *profile, u0 = *u0, spec, v0, v_coupling, noise, noise_seed, steps, tg]() mutable {
    const GridSpec grid = basis->default_grid();
    double v_norm = 0.0;
    if (v0 > 0.0) {
      const GaussianSampler sampler(basis, *noise);
      spec.potential = sample_lognormal_potential(v0, v_coupling, sampler, grid, noise_seed);
      v_norm = std::sqrt(grid_norm_sq(grid, spec.potential->values));
    }
    Outputs out;
    out.series.comments = {
        "fractional evolution dU/dt = -D0 (-Lap)^alpha U + V U + g_c F(U) on a torus (Strang splitting)",
        "norm_sq: ||U||^2; mean_mode: coefficient of the constant mode",
    };
    out.series.columns = {"t", "norm_sq", "mean_mode"};
    SpectralField u(basis, u0);
    out.series.add({0.0, u.norm_squared(), u.coeffs[0]});
    for (std::size_t k = 1; k < tg.times.size(); ++k) {
      u = evolve_fractional(u, spec, &profile, tg.times[k] - tg.times[k - 1], static_cast<int>(steps));
      out.series.add({tg.times[k], u.norm_squared(), u.coeffs[0]});
    }
    const KatoRellichReport kr = kato_rellich_report(v_norm, spec.alpha, basis->dimension(), 1.0);
    out.report = key_value_table();
    out.report.comments = {"fractional evolution summary; potential admissibility via the resolvent bound"};
    out.report.add_kv("alpha", spec.alpha);
    out.report.add_kv("dimension", basis->dimension());
    out.report.add_kv("d0", spec.d0);
    out.report.add_kv("coupling", spec.coupling);
    out.report.add_kv("potential_l2_norm", v_norm);
    out.report.add_kv("kato_rellich_constant", kr.constant);
    out.report.add_kv("r_min", kr.r_min);
    out.report.add_kv("final_norm_sq", u.norm_squared());
    return out;
  };
}

Runner plan_kato_rellich(Reader& r, const Settings&) {
  const double alpha = r.num("kato-rellich.alpha", 1.0);
  const long dim = r.integer("kato-rellich.dimension", 3);
  const double v_norm = r.num("kato-rellich.v_norm", 1.0);
  const double scale = r.num("kato-rellich.r", 1.0);
  if (dim < 1 || dim > 3) r.issue("kato-rellich.dimension", "must be 1, 2 or 3");
  else check_alpha_gate(r, "kato-rellich.alpha", alpha, static_cast<int>(dim));
  if (!(v_norm >= 0.0) || !std::isfinite(v_norm)) r.issue("kato-rellich.v_norm", "must be finite and >= 0");
  if (!(scale > 0.0)) r.issue("kato-rellich.r", "must be > 0");
  if (!r.ok()) return {};
  const int d = static_cast<int>(dim);
  return [alpha, d, v_norm, scale]() {
    const KatoRellichReport rep = kato_rellich_report(v_norm, alpha, d, scale);
    Outputs out;
    out.series.comments = {"relative bound ||V phi|| <= a ||(-Lap)^alpha phi|| + b ||phi|| across scales r",
                           "admissible: 1 when a < 1"};
    out.series.columns = {"r", "a", "b", "admissible"};
    const double centre = rep.r_min > 0.0 ? rep.r_min : 1.0;
    for (int i = -20; i <= 20; ++i) {
      const double rr = centre * std::pow(10.0, i / 10.0);
      const RelativeBound rb = relative_bound_with_constant(v_norm, rep.constant, alpha, d, rr);
      out.series.add({rr, rb.a, rb.b, rb.a < 1.0 ? 1.0 : 0.0});
    }
    out.report = key_value_table();
    out.report.comments = {"resolvent constant C(alpha,D) and relative-bound coefficients at scale r"};
    out.report.add_kv("alpha", rep.alpha);
    out.report.add_kv("dimension", rep.dimension);
    out.report.add_kv("constant", rep.constant);
    out.report.add_kv("divergent", rep.divergent ? 1.0 : 0.0);
    out.report.add_kv("v_norm", rep.v_norm);
    out.report.add_kv("r", rep.r);
    out.report.add_kv("a", rep.a);
    out.report.add_kv("b", rep.b);
    out.report.add_kv("r_min", rep.r_min);
    out.report.add_kv("admissible", rep.admissible ? 1.0 : 0.0);
    return out;
  };
}

Runner plan_damped_wave(Reader& r, const Settings& s) {
  const BasisPtr basis = read_basis(r);
  const TimeGrid tg = read_time(r, *s.options);
  const auto f = read_field(r, basis, "initial", s, "random");
  const auto g = read_field(r, basis, "velocity", s, "zero");
  DampedWaveProblem prob;
  prob.alpha = r.num("damped-wave.alpha", 1.0);
  const double nu0 = r.num("damped-wave.nu0", 0.0);
  const double coupling = r.num("damped-wave.damping_coupling", 0.0);
  const long truncation = r.integer("damped-wave.truncation", 512);
  if (!(nu0 >= 0.0) || !std::isfinite(nu0)) r.issue("damped-wave.nu0", "must be finite and >= 0");
  if (!(coupling >= 0.0)) r.issue("damped-wave.damping_coupling", "must be >= 0");
  if (coupling > 0.0 && !(nu0 > 0.0)) r.issue("damped-wave.nu0", "stochastic damping needs nu0 > 0");
  if (truncation < 1) r.issue("damped-wave.truncation", "must be >= 1");
  if (basis && truncation > static_cast<long>(basis->size())) {
    r.issue("damped-wave.truncation", "exceeds the basis size " + std::to_string(basis->size()));
  }
  if (basis) check_alpha_gate(r, "damped-wave.alpha", prob.alpha, basis->dimension());
  std::optional<Eigen::MatrixXd> noise;
  std::uint64_t noise_seed = 0;
  if (coupling > 0.0 && basis) {
    noise = read_kernel(r, basis, "noise");
    noise_seed = s.seed(r, "noise.seed", 1);
  }
  if (!basis || !f || !g || !r.ok()) return {};
  prob.basis = basis;
  prob.damping = nu0;
  prob.f = *f;
  prob.g = *g;
  prob.truncation = static_cast<std::size_t>(truncation);

  return [prob, coupling, noise, noise_seed, tg]() mutable {
    const GridSpec grid = prob.basis->default_grid();
    if (coupling > 0.0) {
      const GaussianSampler sampler(prob.basis, *noise);
      prob.damping_field = sample_stochastic_damping(prob.damping, coupling, sampler, grid, noise_seed);
    }
    Outputs out;
    out.series.comments = {
        "damped wave U'' + nu U' + (-Lap)^alpha U = 0 via U = exp(-nu t/2) Phi",
        "phi_norm_sq: ||Phi||^2 and u_norm_sq: ||U||^2 by grid quadrature",
    };
    out.series.columns = {"t", "phi_norm_sq", "u_norm_sq"};
    DampedWaveResult res;
    for (double t : tg.times) {
      res = damped_wave_propagate(prob, t);
      out.series.add({t, grid_norm_sq(res.phi.grid, res.phi.values), grid_norm_sq(res.u.grid, res.u.values)});
    }
    const Eigen::VectorXd& mu = res.a_eigenvalues;
    out.report = key_value_table();
    out.report.comments = {"spectrum of the shifted operator A = (-Lap)^alpha - nu^2/4 on the truncated block"};
    out.report.add_kv("alpha", prob.alpha);
    out.report.add_kv("nu0", prob.damping);
    out.report.add_kv("damping_coupling", coupling);
    out.report.add_kv("truncation", static_cast<double>(mu.size()));
    out.report.add_kv("a_min_eigenvalue", mu.minCoeff());
    out.report.add_kv("a_max_eigenvalue", mu.maxCoeff());
    out.report.add_kv("hyperbolic_modes", static_cast<double>((mu.array() < 0.0).count()));
    if (prob.damping_field) {
      out.report.add_kv("damping_min", prob.damping_field->values.minCoeff());
      out.report.add_kv("damping_max", prob.damping_field->values.maxCoeff());
    }
    return out;
  };
}

Runner plan(const ScenarioConfig& config, const RunOptions& options, std::vector<std::string>& issues) {
  Reader r(config.tree, issues);
  const Settings s{&options};
  if (!(options.tolerance_scale > 0.0)) r.issue("--tolerance-scale", "must be > 0");
  if (options.workers < 1) r.issue("--workers", "must be >= 1");
  const std::string kind = config.kind();
  const std::string name = config.name();
  if (name.empty() || name.find_first_of("/\\ ") != std::string::npos) {
    r.issue("scenario.name", "must be a non-empty file-name-safe string");
  }
  try {
    if (kind == "parabolic") return plan_parabolic(r, s, false);
    if (kind == "porous-medium") return plan_parabolic(r, s, true);
    if (kind == "hyperbolic") return plan_hyperbolic(r, s);
    if (kind == "ensemble") return plan_ensemble(r, s);
    if (kind == "anomalous") return plan_anomalous(r, s);
    if (kind == "kato-rellich") return plan_kato_rellich(r, s);
    if (kind == "damped-wave") return plan_damped_wave(r, s);
  } catch (const Error& e) {
    r.issue("scenario", e.what());
    return {};
  }
  r.issue("scenario.kind", kind.empty() ? "missing" : "unknown kind '" + kind + "'");
  return {};
}

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid configuration:";
  for (const auto& i : issues) out += "\n  " + i;
  return out;
}

}  // namespace

std::vector<std::string> validate_scenario(const ScenarioConfig& config, const RunOptions& options) {
  std::vector<std::string> issues;
  plan(config, options, issues);
  return issues;
}

RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> issues;
  const Runner runner = plan(config, options, issues);
  if (!issues.empty() || !runner) throw ConfigurationError(join_issues(issues));

  const Outputs out = runner();
  fs::create_directories(options.output_dir);
  const std::string name = config.name();
  RunResult result;
  std::ostringstream manifest;
  std::string settings = config.text;
  settings += "\nseed-override=" + (options.seed_override ? std::to_string(*options.seed_override) : std::string("none"));
  settings += "\ntolerance-scale=" + format_number(options.tolerance_scale);
  manifest << "# specgal run manifest\n";
  manifest << "scenario = " << name << "\n";
  manifest << "kind = " << config.kind() << "\n";
  manifest << "tool_version = " << kToolVersion << "\n";
  manifest << "config_hash = fnv1a64:" << hex64(fnv1a(settings)) << "\n";
  for (const auto& [suffix, table] : {std::pair{"-series.csv", &out.series}, std::pair{"-report.csv", &out.report}}) {
    const std::string text = render(*table);
    const fs::path p = options.output_dir / (name + suffix);
    std::ofstream f(p, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + p.string());
    result.outputs.push_back(p);
    manifest << "output " << p.filename().string() << " = fnv1a64:" << hex64(fnv1a(text)) << "\n";
  }
  result.manifest = options.output_dir / "manifest.txt";
  std::ofstream mf(result.manifest, std::ios::binary);
  mf << manifest.str();
  if (!mf) throw std::runtime_error("cannot write " + result.manifest.string());
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// SPECGAL_SCENARIO_DIR in the environment wins; then the installed share
// directory next to the running binary; then the source tree.
fs::path default_scenario_dir() {
  if (const char* env = std::getenv("SPECGAL_SCENARIO_DIR"); env != nullptr && *env != '\0') return env;
  std::error_code ec;
  const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    const fs::path installed = exe.parent_path().parent_path() / "share" / "specgal" / "scenarios";
    if (fs::is_directory(installed, ec)) return installed;
  }
  return fs::path(SPECGAL_SCENARIO_DIR);
}

std::vector<BundledScenario> list_scenarios(const fs::path& dir) {
  std::vector<BundledScenario> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    try {
      const ScenarioConfig cfg = load_scenario(entry.path());
      out.push_back({cfg.name(), cfg.description(), entry.path()});
    } catch (const std::exception&) {
      out.push_back({entry.path().stem().string(), "(unreadable)", entry.path()});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

fs::path resolve_scenario(const std::string& name_or_path, const fs::path& dir) {
  const fs::path p(name_or_path);
  if (fs::exists(p)) return p;
  const fs::path bundled = dir / (name_or_path + ".ini");
  if (fs::exists(bundled)) return bundled;
  return p;
}

}  // namespace specgal::cli
