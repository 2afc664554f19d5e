// liepmp command-line front end: solve, demo, verify, audit.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <numbers>

#include "liepmp/io.hpp"
#include "liepmp/liepmp.hpp"

namespace fs = std::filesystem;
using namespace liepmp;

namespace {

enum Exit { kOk = 0, kSolverFailure = 1, kInvalidConfig = 2, kVerifyFailure = 3 };

struct RunConfig {
  std::string command;
  std::string preset;
  std::string problem_path;
  std::string out;
  double tol = 1e-10;
  int segments = 0;
  int max_iter = 200;
  std::string homotopy = "on";
  unsigned seed = 1;
};

constexpr double kAuditTol = 1e-5;
constexpr double kEquivarianceTol = 1e-8;
constexpr double kOracleGapTol = 1e-3;
constexpr double kMultiplierTol = 1e-12;
constexpr int kOracleFromZeroMax = 200;

Json config_json(const RunConfig& c, const ProblemSpec& spec) {
  Json j;
  j["command"] = c.command;
  j["preset"] = c.preset;
  j["problem_file"] = c.problem_path;
  j["problem"] = problem_to_json(spec);
  j["out"] = c.out;
  j["tol"] = fmt17(c.tol);
  j["segments"] = c.segments;
  j["max_iter"] = c.max_iter;
  j["homotopy"] = c.homotopy;
  j["seed"] = c.seed;
  return j;
}

SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  o.tol = c.tol;
  o.segments = c.segments;
  o.max_iter = c.max_iter;
  o.homotopy = c.homotopy == "on";
  return o;
}

bool residuals_ok(const SolveReport& r, double tol) {
  const ResidualReport& res = r.residuals;
  return r.converged && res.max_residual() <= 10.0 * tol && res.max_multiplier <= kMultiplierTol &&
         !res.nontriviality_violation;
}

template <MatrixLieGroup G>
Json summary_json(const LieOCP<G>& p, const ExtremalTrajectory<G>& e, double h) {
  const int N = p.horizon;
  double umax = 0.0, xmax = 0.0;
  int first_sat = -1, last_sat = -1;
  const double cbound = p.controls.hi.cwiseAbs().cwiseMin(p.controls.lo.cwiseAbs()).minCoeff();
  for (int t = 0; t < N; ++t) {
    const double a = e.u[t].cwiseAbs().maxCoeff();
    umax = std::max(umax, a);
    const bool sat = ((e.u[t] - p.controls.hi).array() >= -1e-9).any() ||
                     ((e.u[t] - p.controls.lo).array() <= 1e-9).any();
    if (sat) {
      if (first_sat < 0) first_sat = t;
      last_sat = t;
    }
  }
  for (const Vec& x : e.x) xmax = std::max(xmax, x.cwiseAbs().maxCoeff());
  Json j;
  j["N"] = N;
  j["final_time"] = N * h;
  j["max_abs_u"] = umax;
  j["control_bound"] = cbound;
  j["saturates"] = first_sat >= 0;
  j["first_saturated_step"] = first_sat;
  j["last_saturated_step"] = last_sat;
  j["max_abs_x"] = xmax;
  const std::vector<double> theta = orientation_angles(e.q);
  j["theta_initial"] = theta.front();
  j["theta_final"] = theta.back();
  Trajectory<G> tr{e.q, e.x, {}};
  j["cost"] = total_cost(p, tr, e.u);
  if (p.boundary.variant == BoundaryVariant::FixedBoth) {
    j["boundary_defect_q"] = log(p.boundary.qN.inverse() * e.q[N]).v.cwiseAbs().maxCoeff();
    j["boundary_defect_x"] = (e.x[N] - p.boundary.xN).cwiseAbs().maxCoeff();
  }
  return j;
}

struct Outcome {
  int code = kOk;
  Json report;
};

template <MatrixLieGroup G>
Outcome run_problem(const RunConfig& c, const LieOCP<G>& p, const WarmStart<G>& warm, double h) {
  Outcome out;
  Json& rep = out.report;
  if (c.command == "audit") {
    const AuditReport a = derivative_audit(p, 100, c.seed);
    Json aj;
    aj["points"] = a.points;
    aj["max_rel_error"] = a.max_rel_error;
    aj["tolerance"] = kAuditTol;
    for (const auto& [k, v] : a.errors) aj["errors"][k] = v;
    aj["pass"] = a.max_rel_error <= kAuditTol;
    rep["audit"] = aj;
    std::cout << "audit: max relative error " << a.max_rel_error << (a.max_rel_error <= kAuditTol ? " ok" : " FAIL")
              << "\n";
    out.code = a.max_rel_error <= kAuditTol ? kOk : kVerifyFailure;
    return out;
  }

  const SolveOptions opts = solve_options(c);
  const SolveResult<G> r = solve_ocp(p, warm, opts);
  rep["solve"] = report_json(r.report);
  const bool ok = residuals_ok(r.report, c.tol);
  if (r.report.converged) {
    rep["summary"] = summary_json(p, r.extremal, h);
    write_text((fs::path(c.out) / "trajectory.csv").string(), trajectory_csv(p, r.extremal, h));
  }
  std::cout << p.name << ": " << (r.report.converged ? "converged" : "not converged") << " in "
            << r.report.iterations << " Newton iterations, residual " << r.report.residual_norm << "\n";
  if (!r.report.message.empty()) std::cout << "  " << r.report.message << "\n";
  if (!ok) {
    out.code = kSolverFailure;
    return out;
  }
  if (c.command == "demo") {
    const Json& s = rep["summary"];
    std::cout << "  max|u| = " << s["max_abs_u"].template get<double>() << " (bound " << s["control_bound"].template get<double>()
              << "), saturates: " << (s["saturates"].template get<bool>() ? "yes" : "no") << "\n"
              << "  max|x| = " << s["max_abs_x"].template get<double>() << ", cost " << s["cost"].template get<double>() << "\n";
  }
  if (c.command != "verify") return out;

  Json v;
  bool pass = true;

  const AuditReport a = derivative_audit(p, 100, c.seed);
  v["audit_max_rel_error"] = a.max_rel_error;
  v["audit_pass"] = a.max_rel_error <= kAuditTol;
  pass = pass && a.max_rel_error <= kAuditTol;

  if (p.left_invariant && p.boundary.variant == BoundaryVariant::FixedBoth) {
    GroupElement<G> g0;
    if constexpr (G::kind == GroupKind::SO2) {
      g0 = rotation2(std::numbers::pi / 6.0);
    } else {
      g0 = axis_angle(Eigen::Vector3d(0.3, 0.2, -0.1));
    }
    const EquivarianceResult eq = equivariance_check(p, g0, warm, opts);
    v["equivariance_control_difference"] = eq.control_difference;
    v["equivariance_pass"] = eq.converged && eq.control_difference <= kEquivarianceTol;
    pass = pass && eq.converged && eq.control_difference <= kEquivarianceTol;
  } else {
    v["equivariance_skipped"] = "maps not left-invariant or boundary not fixed at both ends";
  }

  const bool from_zero = p.horizon * p.nu <= kOracleFromZeroMax;
  const std::vector<Vec> u0 = from_zero ? std::vector<Vec>(p.horizon, p.controls.clamp(Vec::Zero(p.nu)))
                                        : r.extremal.u;
  v["oracle_start"] = from_zero ? "zero" : "pmp_controls";
  try {
    const OracleSolution<G> o = oracle_solve(p, u0);
    const double cpmp = total_cost(p, Trajectory<G>{r.extremal.q, r.extremal.x, {}}, r.extremal.u);
    const double gap = std::abs(cpmp - o.cost) / std::max(1.0, std::abs(o.cost));
    v["oracle_cost"] = o.cost;
    v["pmp_cost"] = cpmp;
    v["oracle_relative_gap"] = gap;
    v["oracle_kkt_norm"] = o.kkt_norm;
    v["oracle_pass"] = gap <= kOracleGapTol;
    pass = pass && gap <= kOracleGapTol;
    try {
      const ExtremalTrajectory<G> rec = reconstruct_costates(p, o.trajectory, o.controls);
      v["reconstruction_max_residual"] = check_extremal(p, rec).max_residual();
    } catch (const Error& e) {
      v["reconstruction_error"] = e.what();
    }
  } catch (const Error& e) {
    v["oracle_error"] = e.what();
    v["oracle_pass"] = false;
    pass = false;
  }
  v["pass"] = pass;
  rep["verify"] = v;
  std::cout << "verify: " << (pass ? "pass" : "FAIL") << "\n";
  out.code = pass ? kOk : kVerifyFailure;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-time maximum principle solver on SO(2) and SO(3)"};
  app.require_subcommand(1, 1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    auto* preset = sub->add_option("--preset", cfg.preset, "Named problem: t1, t2, t3, so3-rest-to-rest");
    auto* file = sub->add_option("--problem", cfg.problem_path, "Problem description (JSON)");
    preset->excludes(file);
    file->excludes(preset);
    sub->add_option("--out", cfg.out, "Output directory (default runs/<name>)");
    sub->add_option("--tol", cfg.tol, "Newton tolerance, in (0, 1e-4]");
    sub->add_option("--segments", cfg.segments, "Shooting segments (0 = automatic)")->check(CLI::NonNegativeNumber);
    sub->add_option("--max-iter", cfg.max_iter, "Newton iterations per stage")->check(CLI::PositiveNumber);
    sub->add_option("--homotopy", cfg.homotopy, "Bound continuation")->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--seed", cfg.seed, "Seed for randomized audits");
  };
  for (const char* name : {"solve", "demo", "verify", "audit"}) {
    CLI::App* sub = app.add_subcommand(name, "");
    add_common(sub);
  }
  app.get_subcommand("solve")->description("Solve and export trajectory.csv and report.json");
  app.get_subcommand("demo")->description("Solve and print a maneuver summary");
  app.get_subcommand("verify")->description("Solve, then run oracle, equivariance and derivative checks");
  app.get_subcommand("audit")->description("Compare analytic partials with finite differences");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalidConfig;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  ProblemSpec spec;
  try {
    if (cfg.preset.empty() == cfg.problem_path.empty()) {
      throw Error(ErrorCode::InvalidConfig, "give exactly one of --preset and --problem");
    }
    if (!(cfg.tol > 0.0) || cfg.tol > 1e-4) throw Error(ErrorCode::InvalidConfig, "--tol must lie in (0, 1e-4]");
    if (!cfg.preset.empty()) {
      auto s = preset_problem(cfg.preset);
      if (!s) throw Error(ErrorCode::InvalidConfig, "unknown preset '" + cfg.preset + "'");
      spec = *s;
    } else {
      spec = load_problem_file(cfg.problem_path);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidConfig;
  }
  const std::string name = std::visit([](const auto& s) { return s.name; }, spec);
  if (cfg.out.empty()) cfg.out = (fs::path("runs") / name).string();

  Outcome outcome;
  try {
    fs::create_directories(cfg.out);
    if (const auto* s2 = std::get_if<So2ManeuverSpec>(&spec)) {
      outcome = run_problem(cfg, build_so2(*s2), so2_warm_start(*s2), s2->h);
    } else {
      const auto& s3 = std::get<So3AttitudeSpec>(spec);
      outcome = run_problem(cfg, build_so3(s3), WarmStart<SO3>{}, s3.h);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool config = e.code() == ErrorCode::InvalidSpec || e.code() == ErrorCode::InvalidConfig;
    outcome.code = config ? kInvalidConfig : kSolverFailure;
    outcome.report["error"] = e.what();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    outcome.code = kInvalidConfig;
    outcome.report["error"] = e.what();
  }

  Json report;
  report["config"] = config_json(cfg, spec);
  report["exit_code"] = outcome.code;
  for (auto& [k, v] : outcome.report.items()) report[k] = v;
  try {
    write_text((fs::path(cfg.out) / "report.json").string(), report.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (outcome.code == kOk) outcome.code = kInvalidConfig;
  }
  return outcome.code;
}
