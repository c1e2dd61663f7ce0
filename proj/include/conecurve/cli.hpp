#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "closed_form.hpp"
#include "cone_geometry.hpp"
#include "errors.hpp"
#include "flow_evolution.hpp"
#include "io.hpp"
#include "ode.hpp"
#include "reduced_system.hpp"
#include "simulation.hpp"

namespace conecurve::cli {

using KeyValues = std::map<std::string, std::string>;

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kBadInput = 2, kIntegratorFailure = 3, kNoFrame = 4 };

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NotOnConstraint:
    case ErrorCode::ZeroState:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidSpec:
    case ErrorCode::OutOfDomain:
      return kBadInput;
    case ErrorCode::NoFrameFound:
      return kNoFrame;
    default:
      return kIntegratorFailure;
  }
}

struct RunConfig {
  std::string name = "run";
  FlowParams params;
  std::optional<double> alpha0, tau0, eta0;
  std::uint64_t seed = 1;
  double s_minus = -20.0;
  double s_plus = 20.0;
  IntegratorConfig integrator;
  std::filesystem::path out_dir = "out";
  bool svg = false;
  std::size_t samples = 2001;
  std::optional<double> plot_radius;

  std::optional<double> k;
  std::vector<double> t_list{0.0};

  LightlikeSolitonParams soliton;
  double soliton_s_min = -2.0;
  double soliton_s_max = 0.9;
  std::size_t soliton_samples = 401;

  std::vector<double> sweep_a{1.0};
  std::vector<double> sweep_c{-2.0, -0.5, 0.0, 0.5, 4.0};
  std::size_t sweep_runs = 8;
  double sweep_horizon = 50.0;
};

namespace detail {

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = io::trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(io::parse_double(item));
    } catch (const Error&) {
      throw Error(ErrorCode::InvalidConfig, key + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, key + ": empty list");
  return out;
}

inline double number(const std::string& key, const std::string& text) {
  try {
    return io::parse_double(text);
  } catch (const Error&) {
    throw Error(ErrorCode::InvalidConfig, key + ": '" + text + "' is not a number");
  }
}

inline bool boolean(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "off" || text == "no") return false;
  throw Error(ErrorCode::InvalidConfig, key + ": expected a boolean, got '" + text + "'");
}

inline std::size_t count(const std::string& key, const std::string& text) {
  const double v = number(key, text);
  if (!(v >= 1.0) || v != std::floor(v)) throw Error(ErrorCode::InvalidConfig, key + ": expected a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline VectorClass parse_vector_class(const std::string& text) {
  if (text == "timelike") return VectorClass::Timelike;
  if (text == "lightlike") return VectorClass::Lightlike;
  if (text == "spacelike") return VectorClass::Spacelike;
  throw Error(ErrorCode::InvalidConfig, "vector: expected timelike, lightlike or spacelike, got '" + text + "'");
}

inline FlowKind parse_flow(const std::string& text) {
  if (text == "cf") return FlowKind::CF;
  if (text == "icf") return FlowKind::ICF;
  throw Error(ErrorCode::InvalidConfig, "flow: expected cf or icf, got '" + text + "'");
}

inline RunConfig make_run_config(const KeyValues& kv) {
  RunConfig rc;
  for (const auto& [key, val] : kv) {
    using namespace detail;
    if (key == "name") rc.name = val;
    else if (key == "a") rc.params.a = number(key, val);
    else if (key == "c") rc.params.c = number(key, val);
    else if (key == "vector") rc.params.vector_class = parse_vector_class(val);
    else if (key == "flow") rc.params.flow = parse_flow(val);
    else if (key == "alpha0") rc.alpha0 = number(key, val);
    else if (key == "tau0") rc.tau0 = number(key, val);
    else if (key == "eta0") rc.eta0 = number(key, val);
    else if (key == "seed") rc.seed = static_cast<std::uint64_t>(number(key, val));
    else if (key == "span") {
      const double s = number(key, val);
      if (!(s > 0.0)) throw Error(ErrorCode::InvalidConfig, "span must be positive");
      rc.s_minus = -s;
      rc.s_plus = s;
    } else if (key == "span_minus") rc.s_minus = number(key, val);
    else if (key == "span_plus") rc.s_plus = number(key, val);
    else if (key == "rel_tol") rc.integrator.rel_tol = number(key, val);
    else if (key == "abs_tol") rc.integrator.abs_tol = number(key, val);
    else if (key == "max_step") rc.integrator.max_step = number(key, val);
    else if (key == "min_step") rc.integrator.min_step = number(key, val);
    else if (key == "blowup_norm") rc.integrator.blowup_norm = number(key, val);
    else if (key == "max_span") rc.integrator.max_span = number(key, val);
    else if (key == "event_tol") rc.integrator.event_tol = number(key, val);
    else if (key == "event_floor") rc.integrator.event_floor = number(key, val);
    else if (key == "out") rc.out_dir = val;
    else if (key == "svg") rc.svg = boolean(key, val);
    else if (key == "samples") rc.samples = count(key, val);
    else if (key == "plot_radius") rc.plot_radius = number(key, val);
    else if (key == "k") rc.k = number(key, val);
    else if (key == "t") rc.t_list = parse_list(key, val);
    else if (key == "soliton_a") rc.soliton.a = number(key, val);
    else if (key == "soliton_eta0") rc.soliton.eta0 = number(key, val);
    else if (key == "soliton_tau0") rc.soliton.tau0 = number(key, val);
    else if (key == "soliton_C") rc.soliton.C = number(key, val);
    else if (key == "soliton_s_min") rc.soliton_s_min = number(key, val);
    else if (key == "soliton_s_max") rc.soliton_s_max = number(key, val);
    else if (key == "soliton_samples") rc.soliton_samples = count(key, val);
    else if (key == "sweep_a") rc.sweep_a = parse_list(key, val);
    else if (key == "sweep_c") rc.sweep_c = parse_list(key, val);
    else if (key == "sweep_runs") rc.sweep_runs = count(key, val);
    else if (key == "sweep_horizon") rc.sweep_horizon = number(key, val);
    else throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "'");
  }
  rc.params.validate();
  rc.integrator.validate();
  if (!(rc.s_minus <= 0.0 && rc.s_plus >= 0.0 && rc.s_minus < rc.s_plus))
    throw Error(ErrorCode::InvalidConfig, "span_minus must be <= 0 <= span_plus");
  return rc;
}

// Explicit state when given; eta0 may be left for the constraint to fix. Otherwise a seeded draw.
inline ReducedState initial_state(const RunConfig& rc) {
  const double gamma = constraint_gamma(rc.params.vector_class);
  if (rc.alpha0 && rc.tau0) {
    if (rc.eta0) return {*rc.alpha0, *rc.tau0, *rc.eta0};
    if (*rc.alpha0 == 0.0) throw Error(ErrorCode::InvalidConfig, "eta0: required when alpha0 = 0");
    return {*rc.alpha0, *rc.tau0, (gamma - *rc.tau0 * *rc.tau0) / (2.0 * *rc.alpha0)};
  }
  if (rc.alpha0 || rc.tau0 || rc.eta0) throw Error(ErrorCode::InvalidConfig, "alpha0 and tau0 must be given together");
  std::mt19937_64 rng(rc.seed);
  return sample_initial_state(constraint_class_of(rc.params.vector_class).kind, rng);
}

inline SimulationResult run_simulation(const RunConfig& rc, const ReducedState& psi0) {
  SimulationRequest req;
  req.params = rc.params;
  req.psi0 = psi0;
  req.s_minus = rc.s_minus;
  req.s_plus = rc.s_plus;
  req.integrator = rc.integrator;
  return simulate(req);
}

inline std::string describe_omega(const std::optional<double>& w) {
  return w ? io::format_double(*w) : std::string("unexplored");
}

inline std::vector<std::string> report_lines(const RunConfig& rc, const ReducedState& psi0,
                                             const SimulationResult& sim) {
  std::vector<std::string> lines;
  lines.push_back("params a=" + io::format_double(rc.params.a) + " c=" + io::format_double(rc.params.c) +
                  " vector=" + std::string(to_string(rc.params.vector_class)) +
                  " flow=" + std::string(to_string(rc.params.flow)));
  lines.push_back("initial alpha=" + io::format_double(psi0.alpha) + " tau=" + io::format_double(psi0.tau) +
                  " eta=" + io::format_double(psi0.eta) + " class=" + std::string(to_string(sim.cls.kind)) +
                  " seed=" + std::to_string(rc.seed));
  for (const auto& e : sim.traj.events)
    lines.push_back("event " + e.kind + " s=" + io::format_double(e.s) + " direction=" + std::to_string(e.direction));
  if (sim.traj.stop_minus)
    lines.push_back("stop_minus " + std::string(to_string(*sim.traj.stop_minus)) +
                    " omega_minus=" + describe_omega(sim.traj.omega_minus));
  if (sim.traj.stop_plus)
    lines.push_back("stop_plus " + std::string(to_string(*sim.traj.stop_plus)) +
                    " omega_plus=" + describe_omega(sim.traj.omega_plus));
  lines.push_back("k_zero_count " + std::to_string(sim.count("k_zero")));
  return lines;
}

inline std::filesystem::path output_path(const RunConfig& rc, const std::string& suffix) {
  return rc.out_dir / (rc.name + suffix);
}

inline int cmd_simulate(const RunConfig& rc, std::ostream& log) {
  const ReducedState psi0 = initial_state(rc);
  const SimulationResult sim = run_simulation(rc, psi0);
  io::CsvTable t;
  t.header = {"s", "alpha", "tau", "eta", "k", "constraint_residual"};
  for (const auto& smp : sim.traj.samples) {
    const ReducedState psi = ReducedState::from_array(smp.state);
    const double k = rc.params.flow == FlowKind::CF ? rc.params.curvature(psi.tau) : 1.0 / rc.params.curvature(psi.tau);
    t.add_row({smp.s, psi.alpha, psi.tau, psi.eta, k, constraint_value(psi) - sim.cls.gamma});
  }
  t.footer = report_lines(rc, psi0, sim);
  io::write_csv(output_path(rc, "_trajectory.csv"), t);
  std::string report;
  for (const auto& l : t.footer) report += l + "\n";
  io::write_file_atomic(output_path(rc, "_report.txt"), report);
  log << report;
  return kOk;
}

inline io::CsvTable curve_table(const std::vector<CurveSample>& curve) {
  io::CsvTable t;
  t.header = {"s", "x1", "x2", "x3", "y1", "y2", "y3", "k"};
  for (const auto& c : curve) t.add_row({c.s, c.X.x1, c.X.x2, c.X.x3, c.Y.x1, c.Y.x2, c.Y.x3, c.k});
  return t;
}

// Pieces of the curve below the height x1 = radius, each projected to the plane.
inline std::vector<io::Polyline> clipped_view(const std::vector<CurveSample>& curve, double radius, bool side) {
  std::vector<io::Polyline> out;
  bool inside = false;
  for (const auto& c : curve) {
    if (!(std::abs(c.X.x1) <= radius)) {
      inside = false;
      continue;
    }
    if (!inside) out.emplace_back();
    inside = true;
    out.back().emplace_back(c.X.x2, side ? c.X.x1 : c.X.x3);
  }
  return out;
}

inline double median_height(const std::vector<CurveSample>& curve) {
  std::vector<double> h;
  for (const auto& c : curve) h.push_back(std::abs(c.X.x1));
  if (h.empty()) return 1.0;
  std::nth_element(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(h.size() / 2), h.end());
  return h[h.size() / 2];
}

inline void add_curve(io::SvgPanel& panel, const std::vector<io::Polyline>& pieces, std::size_t color) {
  for (const auto& pl : pieces) {
    panel.lines.push_back(pl);
    panel.color_of.push_back(color);
  }
}

inline io::Polyline rim_circle(double radius) {
  io::Polyline pl;
  for (int i = 0; i <= 180; ++i) {
    const double th = 2.0 * std::numbers::pi * i / 180.0;
    pl.emplace_back(radius * std::cos(th), radius * std::sin(th));
  }
  return pl;
}

struct ReconstructOutput {
  SimulationResult sim;
  Reconstruction curve;
  std::vector<IcfComponent> components;
};

inline ReconstructOutput reconstruct_run(const RunConfig& rc, const ReducedState& psi0) {
  ReconstructOutput out;
  out.sim = run_simulation(rc, psi0);
  ReconstructOptions opt;
  opt.samples = rc.samples;
  out.curve = reconstruct_curve(out.sim.traj, rc.params, rc.integrator, opt);
  if (rc.params.flow == FlowKind::CF) {
    const auto zeros = out.sim.event_locations("k_zero");
    out.components = split_icf_components(out.curve.samples, zeros);
  }
  return out;
}

inline int cmd_reconstruct(const RunConfig& rc, std::ostream& log) {
  const ReducedState psi0 = initial_state(rc);
  const ReconstructOutput r = reconstruct_run(rc, psi0);
  auto curve_csv = curve_table(r.curve.samples);
  curve_csv.footer = report_lines(rc, psi0, r.sim);
  curve_csv.footer.push_back("max_projection_error " + io::format_double(r.curve.max_projection_error));
  curve_csv.footer.push_back("max_relative_projection_error " +
                             io::format_double(r.curve.max_relative_projection_error));
  io::write_csv(output_path(rc, "_curve.csv"), curve_csv);
  for (std::size_t i = 0; i < r.components.size(); ++i) {
    auto t = curve_table(r.components[i].samples);
    t.footer.push_back("icf component " + std::to_string(i + 1) + " of " + std::to_string(r.components.size()) +
                       " on s in (" + io::format_double(r.components[i].s_lo) + ", " +
                       io::format_double(r.components[i].s_hi) + ")");
    io::write_csv(output_path(rc, "_icf_" + std::to_string(i + 1) + ".csv"), t);
  }
  if (rc.svg) {
    const auto& smp = r.curve.samples;
    const double R = rc.plot_radius.value_or(8.0 * median_height(smp));
    io::SvgPanel top{"curve, (x2,x3) projection", {}, {rim_circle(R)}, {}};
    add_curve(top, clipped_view(smp, R, false), 0);
    io::SvgPanel side{"curve, (x2,x1) side view", {}, {{{-R, R}, {0.0, 0.0}, {R, R}}}, {}};
    add_curve(side, clipped_view(smp, R, true), 0);
    std::vector<io::SvgPanel> panels{top, side};
    if (!r.components.empty()) {
      io::SvgPanel comps{"-Y components, (x2,x3) projection", {}, {}, {}};
      for (std::size_t i = 0; i < r.components.size(); ++i) {
        const auto& cs = r.components[i].samples;
        add_curve(comps, clipped_view(cs, 8.0 * median_height(cs), false), i);
      }
      panels.push_back(comps);
    }
    io::write_file_atomic(output_path(rc, ".svg"), io::render_svg(panels));
  }
  log << "curve samples " << r.curve.samples.size() << "\n";
  log << "icf components " << r.components.size() << "\n";
  log << "max_projection_error " << io::format_double(r.curve.max_projection_error) << "\n";
  log << "max_relative_projection_error " << io::format_double(r.curve.max_relative_projection_error) << "\n";
  return kOk;
}

inline int cmd_homothety(const RunConfig& rc, std::ostream& log) {
  if (!rc.k) throw Error(ErrorCode::InvalidConfig, "k: required for homothety");
  if (*rc.k == 0.0) throw Error(ErrorCode::InvalidSpec, "k: homothety needs k != 0");
  const HomothetyFlow flow(*rc.k, rc.params.flow);
  io::CsvTable t;
  t.header = {"t", "f", "k_hat", "in_domain"};
  for (double tv : rc.t_list) {
    if (flow.contains(tv)) t.add_row({tv, flow.scale(tv), flow.curvature(tv), 1.0});
    else t.add_row({tv, NAN, NAN, 0.0});
  }
  t.footer.push_back("k=" + io::format_double(*rc.k) + " flow=" + std::string(to_string(rc.params.flow)) + " J=(" +
                     io::format_double(flow.t_min()) + ", " + io::format_double(flow.t_max()) + ")");
  io::write_csv(output_path(rc, "_homothety.csv"), t);
  log << io::to_csv(t);
  return kOk;
}

inline int cmd_soliton(const RunConfig& rc, std::ostream& log) {
  const auto& sp = rc.soliton;
  sp.validate();
  if (!(rc.soliton_s_max < sp.s_max()))
    throw Error(ErrorCode::OutOfDomain, "soliton_s_max must stay below a*eta0 = " + io::format_double(sp.s_max()));
  std::vector<double> grid(rc.soliton_samples);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = rc.soliton_s_min + (rc.soliton_s_max - rc.soliton_s_min) * static_cast<double>(i) /
                                     static_cast<double>(std::max<std::size_t>(1, grid.size() - 1));
  const auto branches = soliton_branches(sp, grid);
  std::vector<io::SvgPanel> panels{{"X (x2,x3)", {}, {}, {}}, {"-Y (x2,x3)", {}, {}, {}}};
  for (std::size_t b = 0; b < branches.size(); ++b) {
    io::CsvTable t;
    t.header = {"s", "alpha", "tau", "eta", "x1", "x2", "x3", "y1", "y2", "y3"};
    io::Polyline px, py;
    for (const auto& smp : branches[b]) {
      t.add_row({smp.s, smp.psi.alpha, smp.psi.tau, smp.psi.eta, smp.X.x1, smp.X.x2, smp.X.x3, smp.Y.x1, smp.Y.x2,
                 smp.Y.x3});
      px.emplace_back(smp.X.x2, smp.X.x3);
      py.emplace_back(-smp.Y.x2, -smp.Y.x3);
    }
    t.footer.push_back("C1=" + io::format_double(sp.C1()) + " D=" + io::format_double(sp.D()) +
                       " branch=" + std::to_string(b + 1));
    io::write_csv(output_path(rc, "_soliton_" + std::to_string(b + 1) + ".csv"), t);
    panels[0].lines.push_back(px);
    panels[1].lines.push_back(py);
  }
  if (rc.svg) io::write_file_atomic(output_path(rc, "_soliton.svg"), io::render_svg(panels));
  const auto cmp = compare_soliton(sp, rc.soliton_s_min, rc.soliton_s_max, rc.soliton_samples);
  log << "branches " << branches.size() << "\n";
  log << "C1 " << io::format_double(sp.C1()) << " D " << io::format_double(sp.D()) << "\n";
  log << "max_error_vs_integration " << io::format_double(cmp.max_error) << " over " << cmp.compared << " points\n";
  return kOk;
}

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass() const { return std::isfinite(value) && value <= threshold; }
};

// Longest run of consecutive samples with |k| >= floor.
inline std::vector<CurveSample> longest_run_away_from_zero(const std::vector<CurveSample>& curve, double floor) {
  std::size_t best_lo = 0, best_len = 0, lo = 0;
  for (std::size_t i = 0; i <= curve.size(); ++i) {
    if (i == curve.size() || std::abs(curve[i].k) < floor) {
      if (i - lo > best_len) best_lo = lo, best_len = i - lo;
      lo = i + 1;
    }
  }
  return {curve.begin() + static_cast<std::ptrdiff_t>(best_lo),
          curve.begin() + static_cast<std::ptrdiff_t>(best_lo + best_len)};
}

// Absolute checks are taken where the state stays moderate: |s| <= 10 and every component within 10.
inline std::vector<Check> verify_checks(const RunConfig& rc, const ReducedState& psi0) {
  std::vector<Check> checks;
  RunConfig tight = rc;
  tight.integrator.rel_tol = std::min(rc.integrator.rel_tol, 1e-12);
  tight.integrator.abs_tol = std::min(rc.integrator.abs_tol, 1e-14);
  tight.s_minus = std::max(rc.s_minus, -10.0);
  tight.s_plus = std::min(rc.s_plus, 10.0);
  const SimulationResult sim = run_simulation(tight, psi0);
  const auto& p = rc.params;
  const auto [lo, hi] = moderate_window(sim.traj, -10.0, 10.0, 10.0);

  double drift = 0.0, r1 = 0.0, r2 = 0.0, g_rise = 0.0;
  double prev_g = NAN;
  for (const auto& smp : sim.traj.samples) {
    if (smp.s < lo || smp.s > hi) continue;
    const ReducedState psi = ReducedState::from_array(smp.state);
    drift = std::max(drift, std::abs(constraint_value(psi) - sim.cls.gamma));
    if (p.flow == FlowKind::CF) {
      const auto res = conserved_residuals(psi, rhs_cf(psi, p).tau, p, sim.cls);
      r1 = std::max(r1, std::abs(res.r1));
      r2 = std::max(r2, std::abs(res.r2));
      const double g = p.c * psi.alpha + psi.eta;
      if (std::isfinite(prev_g)) g_rise = std::max(g_rise, g - prev_g);
      prev_g = g;
    }
  }
  checks.push_back({"window_shortfall", std::max(0.0, 1.0 - (hi - lo)), 0.0});
  checks.push_back({"constraint_drift", drift, 1e-8});
  if (p.flow == FlowKind::CF) {
    checks.push_back({"conserved_r1", r1, 1e-8});
    checks.push_back({"conserved_r2", r2, 1e-8});
    checks.push_back({"g_nonincreasing", std::max(0.0, g_rise), 1e-8});
  }

  ReconstructOptions opt;
  opt.samples = 2001;
  opt.s_min = lo;
  opt.s_max = hi;
  IntegratorConfig geo = tight.integrator;
  const Reconstruction rec = reconstruct_curve(sim.traj, p, geo, opt);
  checks.push_back({"roundtrip_projection", rec.max_projection_error, 1e-6});
  checks.push_back({"frame_expansion", rec.max_expansion_error, 1e-6});
  checks.push_back({"self_similarity", rec.max_self_similarity_error, 1e-6});
  const auto frames = reconstruct_curve_frames(sim.traj, p, geo, opt);
  double route = 0.0;
  for (std::size_t i = 0; i < std::min(frames.size(), rec.samples.size()); ++i)
    route = std::max({route, max_abs(frames[i].X - rec.samples[i].X), max_abs(frames[i].T - rec.samples[i].T),
                      max_abs(frames[i].Y - rec.samples[i].Y)});
  checks.push_back({"frame_route_agreement", route, 1e-6});

  if (p.flow == FlowKind::CF) {
    const IsometryFamily fam = isometry_family(p);
    const auto& curve = rec.samples;
    const double t = 0.01;
    const double flow_res = verify_flow_equation(
        [&](double tv) { return evolve_self_similar(curve, fam, tv); }, t, 1e-4, FlowKind::CF);
    checks.push_back({"flow_equation", flow_res, 1e-5});
    const auto run = longest_run_away_from_zero(curve, 0.25);
    if (run.size() >= 5) checks.push_back({"duality_curvature", cf_icf_duality(run).max_curvature_error, 1e-5});
  }

  if (p.c != 0.0 && p.flow == FlowKind::CF) {
    double fp_res = 0.0;
    for (const auto& fp : fixed_points(p).points) fp_res = std::max(fp_res, rhs_cf(fp.point, p).max_abs());
    checks.push_back({"fixed_point_residual", fp_res, 1e-14});
  }
  checks.push_back({"soliton_oracle", compare_soliton(LightlikeSolitonParams{}, -2.0, 0.9, 200).max_error, 1e-6});
  return checks;
}

inline int cmd_verify(const RunConfig& rc, std::ostream& log) {
  const ReducedState psi0 = initial_state(rc);
  classify_initial(psi0);
  const auto checks = verify_checks(rc, psi0);
  io::CsvTable t;
  t.header = {"check", "value", "threshold", "status"};
  bool ok = true;
  for (const auto& c : checks) {
    t.rows.push_back({c.name, io::format_double(c.value), io::format_double(c.threshold), c.pass() ? "PASS" : "FAIL"});
    ok = ok && c.pass();
  }
  io::write_csv(output_path(rc, "_verify.csv"), t);
  log << io::to_csv(t);
  return ok ? kOk : kVerifyFailed;
}

struct SweepRow {
  double a = 0.0, c = 0.0;
  std::uint64_t seed = 0;
  ReducedState psi0;
  std::string cls;
  std::size_t k_zeros = 0;
  std::size_t components = 0;
  std::string stop_minus, stop_plus;
  double omega_minus = NAN, omega_plus = NAN;
  double k_minus = NAN, k_plus = NAN;
  double fixed_point_distance = NAN;
  std::string error;
};

inline SweepRow sweep_row(const RunConfig& base, double a, double c, std::uint64_t seed) {
  SweepRow row;
  row.a = a;
  row.c = c;
  row.seed = seed;
  try {
    RunConfig rc = base;
    rc.params.a = a;
    rc.params.c = c;
    rc.seed = seed;
    rc.alpha0.reset();
    rc.tau0.reset();
    rc.eta0.reset();
    rc.s_minus = -base.sweep_horizon;
    rc.s_plus = base.sweep_horizon;
    row.psi0 = initial_state(rc);
    const SimulationResult sim = run_simulation(rc, row.psi0);
    row.cls = std::string(to_string(sim.cls.kind));
    row.k_zeros = sim.count("k_zero");
    row.components = row.k_zeros + 1;
    row.stop_minus = std::string(to_string(sim.traj.stop_minus.value_or(StopReason::SpanExhausted)));
    row.stop_plus = std::string(to_string(sim.traj.stop_plus.value_or(StopReason::SpanExhausted)));
    row.omega_minus = sim.traj.omega_minus.value_or(NAN);
    row.omega_plus = sim.traj.omega_plus.value_or(NAN);
    const auto& sm = sim.traj.samples;
    row.k_minus = rc.params.curvature(sm.front().state[1]);
    row.k_plus = rc.params.curvature(sm.back().state[1]);
    if (c < 0.0 && sim.cls.kind == ConstraintKind::H)
      row.fixed_point_distance = (ReducedState::from_array(sm.back().state) - fixed_points(rc.params).points[0].point).norm();
    else if (sim.cls.kind == ConstraintKind::C)
      row.fixed_point_distance = ReducedState::from_array(sm.back().state).norm();
  } catch (const Error& e) {
    row.error = std::string(to_string(e.code()));
  }
  return row;
}

inline const std::vector<std::string>& sweep_header() {
  static const std::vector<std::string> h{"a",          "c",          "seed",       "alpha0",     "tau0",
                                          "eta0",       "class",      "k_zeros",    "components", "stop_minus",
                                          "stop_plus",  "omega_minus", "omega_plus", "k_minus",    "k_plus",
                                          "fixed_point_distance", "error"};
  return h;
}

inline std::vector<std::string> sweep_cells(const SweepRow& r) {
  using io::format_double;
  return {format_double(r.a),          format_double(r.c),           std::to_string(r.seed),
          format_double(r.psi0.alpha), format_double(r.psi0.tau),    format_double(r.psi0.eta),
          r.cls,                       std::to_string(r.k_zeros),    std::to_string(r.components),
          r.stop_minus,                r.stop_plus,                  format_double(r.omega_minus),
          format_double(r.omega_plus), format_double(r.k_minus),     format_double(r.k_plus),
          format_double(r.fixed_point_distance), r.error};
}

struct SweepJob {
  double a, c;
  std::uint64_t seed;
};

// Rows run concurrently on a small worker pool; each one lands in its own file before the summary is assembled.
inline std::vector<SweepRow> run_sweep(const RunConfig& rc, bool write_rows = false) {
  std::vector<SweepJob> jobs;
  for (double a : rc.sweep_a)
    for (double c : rc.sweep_c)
      for (std::size_t i = 0; i < rc.sweep_runs; ++i) jobs.push_back({a, c, rc.seed + i});
  std::vector<SweepRow> rows(jobs.size());
  if (write_rows) std::filesystem::create_directories(rc.out_dir / (rc.name + "_sweep_rows"));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      rows[j] = sweep_row(rc, jobs[j].a, jobs[j].c, jobs[j].seed);
      if (!write_rows) continue;
      io::CsvTable t;
      t.header = sweep_header();
      t.rows.push_back(sweep_cells(rows[j]));
      io::write_csv(rc.out_dir / (rc.name + "_sweep_rows") / ("row_" + std::to_string(j) + ".csv"), t);
    }
  };
  const std::size_t n = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 2, 8);
  std::vector<std::future<void>> pool;
  for (std::size_t w = 0; w < std::min(n, jobs.size()); ++w) pool.push_back(std::async(std::launch::async, worker));
  for (auto& f : pool) f.get();
  return rows;
}

inline int cmd_sweep(const RunConfig& rc, std::ostream& log) {
  const auto rows = run_sweep(rc, true);
  io::CsvTable t;
  t.header = sweep_header();
  std::size_t max_zeros = 0;
  for (const auto& r : rows) {
    t.rows.push_back(sweep_cells(r));
    max_zeros = std::max(max_zeros, r.k_zeros);
  }
  t.footer.push_back("rows=" + std::to_string(rows.size()) + " max_k_zeros=" + std::to_string(max_zeros) +
                     " vector=" + std::string(to_string(rc.params.vector_class)) +
                     " horizon=" + io::format_double(rc.sweep_horizon));
  io::write_csv(output_path(rc, "_sweep.csv"), t);
  log << t.footer.back() << "\n";
  return kOk;
}

}  // namespace conecurve::cli
