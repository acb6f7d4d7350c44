#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mpcnn/bounds.hpp"
#include "mpcnn/errors.hpp"
#include "mpcnn/mpc.hpp"
#include "mpcnn/nn.hpp"
#include "mpcnn/pipeline.hpp"
#include "mpcnn/scaling.hpp"
#include "mpcnn/serialize.hpp"
#include "mpcnn/verify.hpp"

namespace fs = std::filesystem;
using mpcnn::serialize::json;
namespace mz = mpcnn;

namespace {

struct RunContext {
  json config;
  std::string config_path;
  fs::path out;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;  // files written by this run

  fs::path artifact(const std::string& name) {
    artifacts.push_back((out / name).string());
    return out / name;
  }

  void cleanup_partial() {
    for (const auto& p : artifacts) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
};

json cfg_section(const RunContext& ctx, const std::string& key) {
  return ctx.config.contains(key) ? ctx.config.at(key) : json::object();
}

template <typename T>
T cfg_get(const json& j, const std::string& key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

mz::mpc::MpcProblem load_problem(const RunContext& ctx) {
  if (!ctx.config.contains("problem"))
    throw mz::ValidationError("config: missing field 'problem'");
  const json& p = ctx.config.at("problem");
  json body;
  if (p.is_string()) {
    fs::path path = p.get<std::string>();
    if (path.is_relative())
      path = fs::path(ctx.config_path).parent_path() / path;
    body = mz::serialize::load_json(path.string());
  } else {
    body = p;
  }
  auto prob = mz::serialize::problem_from_json(body);
  mz::mpc::validate(prob);
  return prob;
}

mz::mpc::Constants load_or_estimate_constants(RunContext& ctx,
                                              const mz::mpc::MpcProblem& prob) {
  const fs::path path = ctx.out / "constants.json";
  if (fs::exists(path)) {
    const json j = mz::serialize::load_json(path.string());
    if (j.at("problem_hash") != mz::serialize::problem_hash(prob))
      throw mz::ValidationError(
          "constants.json was computed for a different problem; rerun "
          "`constants`");
    return mz::serialize::constants_from_json(j);
  }
  const json cc = cfg_section(ctx, "constants");
  auto c = mz::mpc::estimate_constants(prob, cfg_get(cc, "n_samples", 2000),
                                       ctx.seed, cfg_get(cc, "safety", 1.1));
  json j = mz::serialize::to_json(c);
  j["problem_hash"] = mz::serialize::problem_hash(prob);
  j["seed"] = ctx.seed;
  mz::serialize::save_json(ctx.artifact("constants.json").string(), j);
  return c;
}

mz::scaling::ScalingParams scaling_params(const RunContext& ctx,
                                          const mz::mpc::MpcProblem& prob,
                                          const mz::mpc::Constants& c) {
  const json sc = cfg_section(ctx, "scaling");
  mz::scaling::ScalingParams p;
  p.c8 = cfg_get(sc, "c8", c.c8);
  p.delta_hi = cfg_get(sc, "delta_hi", c.delta_bar);
  const double d_target =
      cfg_get(sc, "d_target", mz::geometry::inradius(prob.X) * 0.1);
  p.delta_lo = cfg_get(sc, "delta_lo",
                       mz::scaling::default_delta_lo(c.c1, c.c6, p.delta_hi,
                                                     d_target));
  p.eps = cfg_get(sc, "eps", 0.0);
  p.validate_against(prob.U);
  return p;
}

double delta1_of(const RunContext& ctx, const mz::mpc::Constants& c) {
  const double d = cfg_get(ctx.config, "delta1", c.delta_bar);
  if (!(d > 0.0) || d > c.delta_bar)
    throw mz::ValidationError("config: delta1 must lie in (0, delta_bar]");
  return d;
}

void write_manifest(RunContext& ctx, const std::string& subcommand) {
  json m;
  m["subcommand"] = subcommand;
  m["config_hash"] = mz::serialize::sha256_hex(ctx.config.dump());
  m["seed"] = ctx.seed;
  m["artifacts"] = ctx.artifacts;
  m["version"] = "0.1.0";
  const char* workers = std::getenv("MPCNN_WORKERS");
  m["workers"] = workers ? workers : "1";
  m["timestamp"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  mz::serialize::save_json((ctx.out / "manifest.json").string(), m);
}

// ---- subcommands -----------------------------------------------------------

int run_constants(RunContext& ctx) {
  const auto prob = load_problem(ctx);
  std::error_code ec;
  fs::remove(ctx.out / "constants.json", ec);  // force a fresh estimate
  const auto c = load_or_estimate_constants(ctx, prob);
  std::cout << "constants written: gamma=" << c.gamma
            << " delta_bar=" << c.delta_bar << " L_u=" << c.L_u << "\n";
  return 0;
}

int run_bounds(RunContext& ctx) {
  const auto prob = load_problem(ctx);
  const auto c = load_or_estimate_constants(ctx, prob);
  const json bc = cfg_section(ctx, "bounds");
  const double dU = mz::geometry::inradius(prob.U);
  const double DU = mz::geometry::radius(prob.U);
  const auto max_wp = cfg_get<std::int64_t>(bc, "max_width_prime", 20);

  double rhs, log10_rhs;
  std::string regime = cfg_get<std::string>(bc, "regime", "uniform");
  if (bc.contains("rhs")) {
    rhs = bc.at("rhs").get<double>();
    log10_rhs = std::log10(rhs);
  } else if (regime == "uniform") {
    const double delta1 = cfg_get(bc, "delta1", delta1_of(ctx, c));
    rhs = mz::bounds::theorem1_rhs(delta1, prob.nx(), prob.nu(), DU, dU,
                                   c.D_Xinv, c.L_u, c.delta_bar, &log10_rhs);
  } else if (regime == "scaled") {
    const double d_target =
        cfg_get(bc, "d_target", mz::geometry::inradius(prob.X) * 0.1);
    const auto r2 =
        mz::bounds::theorem2_rhs(c, prob.nx(), prob.nu(), DU, dU, d_target);
    rhs = r2.rhs;
    log10_rhs = r2.log10_rhs;
  } else {
    throw mz::ValidationError("config: bounds.regime must be uniform|scaled");
  }

  std::ofstream csv(ctx.artifact("bounds.csv"));
  csv << "n_w_prime,n_d_prime,n_w,n_d,rhs,log10_rhs\n";
  for (const auto& pr : mz::bounds::feasible_pairs(rhs, max_wp)) {
    const auto arch = mz::bounds::realized_architecture(
        pr.n_w_prime, pr.n_d_prime, prob.nx(), prob.nu());
    csv << pr.n_w_prime << ',' << pr.n_d_prime << ',' << arch.n_w << ','
        << arch.n_d << ',' << mz::serialize::format_double(rhs) << ','
        << mz::serialize::format_double(log10_rhs) << '\n';
  }
  std::cout << "bounds.csv written (rhs=" << rhs << ")\n";
  return 0;
}

int run_dataset(RunContext& ctx) {
  const auto prob = load_problem(ctx);
  const auto c = load_or_estimate_constants(ctx, prob);
  const mz::mpc::MpcSolver solver(prob);
  const json dc = cfg_section(ctx, "dataset");
  const auto n = cfg_get<std::int64_t>(dc, "n", 10000);
  const std::string regime = cfg_get<std::string>(ctx.config, "regime", "uniform");

  mz::pipeline::Dataset ds;
  if (regime == "uniform") {
    ds = mz::pipeline::build_uniform_dataset(solver, c, delta1_of(ctx, c), n,
                                             ctx.seed);
  } else if (regime == "scaled") {
    ds = mz::pipeline::build_scaled_dataset(solver, c,
                                            scaling_params(ctx, prob, c), n,
                                            ctx.seed);
  } else {
    throw mz::ValidationError("config: regime must be uniform|scaled");
  }
  const fs::path path = ctx.artifact("dataset.csv");
  ctx.artifact("dataset.csv.meta.json");
  mz::pipeline::save_dataset(ds, path.string());
  std::cout << "dataset.csv written (" << ds.inputs.size() << " samples, "
            << regime << ")\n";
  return 0;
}

int run_train(RunContext& ctx) {
  const auto ds =
      mz::pipeline::load_dataset((ctx.out / "dataset.csv").string());
  const json tc = cfg_section(ctx, "train");
  mz::nn::TrainConfig cfg;
  cfg.lr = cfg_get(tc, "lr", 1e-3);
  cfg.batch = cfg_get(tc, "batch", 64);
  cfg.epochs = cfg_get(tc, "epochs", 200);
  cfg.lr_decay = cfg_get(tc, "lr_decay", 1.0);
  cfg.val_fraction = cfg_get(tc, "val_fraction", 0.1);
  cfg.patience = cfg_get(tc, "patience", 20);
  cfg.seed = ctx.seed;
  std::vector<int> dims = cfg_get(tc, "dims", std::vector<int>{});
  if (dims.empty()) {
    const int nin = static_cast<int>(ds.inputs[0].size());
    const int nout = static_cast<int>(ds.targets[0].size());
    dims = {nin, 32, 32, nout};
  }

  const auto res = mz::nn::train(ds.inputs, ds.targets, dims, cfg);
  json mj = mz::serialize::to_json(res.net);
  mj["meta"] = {{"regime", ds.meta.regime},
                {"eps", ds.meta.eps},
                {"delta1", ds.meta.delta1},
                {"delta_lo", ds.meta.delta_lo},
                {"delta_hi", ds.meta.delta_hi},
                {"c8", ds.meta.c8},
                {"input_halfwidth", ds.meta.input_halfwidth},
                {"problem_hash", ds.meta.problem_hash},
                {"best_val_mse", res.best_val_mse},
                {"best_epoch", res.best_epoch},
                {"sup_error", mz::nn::sup_error(res.net, ds.inputs, ds.targets)}};
  mz::serialize::save_json(ctx.artifact("model.json").string(), mj);

  std::ofstream hist(ctx.artifact("history.csv"));
  hist << "epoch,train_mse,val_mse\n";
  for (std::size_t e = 0; e < res.history.size(); ++e)
    hist << e << ',' << mz::serialize::format_double(res.history[e].train_mse)
         << ',' << mz::serialize::format_double(res.history[e].val_mse) << '\n';
  std::cout << "model.json written (best val mse " << res.best_val_mse
            << " at epoch " << res.best_epoch << ")\n";
  return 0;
}

mz::verify::Policy load_policy(const RunContext& ctx,
                               const mz::mpc::MpcProblem& prob) {
  const json mj = mz::serialize::load_json((ctx.out / "model.json").string());
  const json& meta = mj.at("meta");
  if (meta.at("problem_hash") != mz::serialize::problem_hash(prob))
    throw mz::ValidationError("model.json belongs to a different problem");
  mz::verify::Policy pol;
  pol.net = mz::serialize::net_from_json(mj);
  pol.input_halfwidth = meta.at("input_halfwidth").get<double>();
  if (meta.at("regime") == "scaled") {
    pol.regime = mz::verify::Regime::scaled;
    pol.params.c8 = meta.at("c8").get<double>();
    pol.params.delta_lo = meta.at("delta_lo").get<double>();
    pol.params.delta_hi = meta.at("delta_hi").get<double>();
    pol.params.eps = meta.at("eps").get<double>();
    pol.params.validate();
  }
  return pol;
}

int run_verify(RunContext& ctx) {
  const auto prob = load_problem(ctx);
  const auto c = load_or_estimate_constants(ctx, prob);
  const mz::mpc::MpcSolver solver(prob);
  const auto pol = load_policy(ctx, prob);
  const json mj = mz::serialize::load_json((ctx.out / "model.json").string());
  const double delta1 = pol.regime == mz::verify::Regime::uniform
                            ? mj.at("meta").at("delta1").get<double>()
                            : pol.params.delta_hi;
  const auto n = cfg_get<std::int64_t>(cfg_section(ctx, "verify"), "n", 10000);

  const auto rep =
      mz::verify::check_pointwise(solver, c, pol, delta1, n, ctx.seed + 1);
  json rj = {{"n_samples", rep.n_samples},
             {"input_violations", rep.input_violations},
             {"error_violations", rep.error_violations},
             {"invariance_failures", rep.invariance_failures},
             {"max_input_violation", rep.max_input_violation},
             {"max_error_vs_bound", rep.max_error_vs_bound},
             {"max_successor_value", rep.max_successor_value},
             {"gamma", c.gamma},
             {"delta1", delta1},
             {"certified", rep.certified()}};
  mz::serialize::save_json(ctx.artifact("verify_report.json").string(), rj);
  std::cout << (rep.certified() ? "certified" : "CERTIFICATION FAILED")
            << ": " << rep.input_violations << " input, "
            << rep.error_violations << " error, " << rep.invariance_failures
            << " invariance violations over " << rep.n_samples << " samples\n";
  return rep.certified() ? 0 : 1;
}

int run_simulate(RunContext& ctx) {
  const auto prob = load_problem(ctx);
  const auto c = load_or_estimate_constants(ctx, prob);
  const mz::mpc::MpcSolver solver(prob);
  const auto pol = load_policy(ctx, prob);
  const json mj = mz::serialize::load_json((ctx.out / "model.json").string());
  const double delta1 = pol.regime == mz::verify::Regime::uniform
                            ? mj.at("meta").at("delta1").get<double>()
                            : pol.params.delta_hi;
  const json sc = cfg_section(ctx, "simulate");
  const auto n_rollouts = cfg_get<std::int64_t>(sc, "n_rollouts", 100);
  const int steps = cfg_get(sc, "steps", 200);
  const int tail = cfg_get(sc, "tail", 12);

  const auto x0s = mz::pipeline::sample_states(solver, c, n_rollouts,
                                               ctx.seed + 2);
  std::ofstream csv(ctx.artifact("simulate_metrics.csv"));
  csv << "rollout,time_to_terminal,tail_mean_state_norm,final_v,"
         "closed_loop_cost,violations\n";
  std::int64_t total_violations = 0;
  double worst_tail = 0.0;
  for (std::int64_t i = 0; i < n_rollouts; ++i) {
    const auto traj = mz::verify::rollout(
        solver, [&pol](const Eigen::VectorXd& x) { return pol(x); }, x0s[i],
        steps);
    if (i == 0) mz::verify::save_trajectory(traj, ctx.artifact("trajectory_0.csv").string());
    const auto m =
        mz::verify::convergence_metrics(traj, prob, c, delta1, tail);
    total_violations += static_cast<std::int64_t>(traj.violations.size());
    worst_tail = std::max(worst_tail, m.tail_mean_state_norm);
    csv << i << ',' << m.time_to_terminal << ','
        << mz::serialize::format_double(m.tail_mean_state_norm) << ','
        << mz::serialize::format_double(m.final_v) << ','
        << mz::serialize::format_double(m.closed_loop_cost) << ','
        << traj.violations.size() << '\n';
  }
  json sj = {{"n_rollouts", n_rollouts},
             {"steps", steps},
             {"tail", tail},
             {"total_violations", total_violations},
             {"worst_tail_mean_state_norm", worst_tail}};
  mz::serialize::save_json(ctx.artifact("simulate_summary.json").string(), sj);
  std::cout << "simulate: " << n_rollouts << " rollouts, "
            << total_violations << " violations, worst tail norm "
            << worst_tail << "\n";
  return 0;
}

int run_report(RunContext& ctx) {
  std::ostringstream txt;
  const auto add = [&](const std::string& file) {
    const fs::path p = ctx.out / file;
    if (!fs::exists(p)) return;
    txt << "== " << file << " ==\n";
    const json j = mz::serialize::load_json(p.string());
    for (const auto& [k, v] : j.items())
      txt << "  " << k << ": " << v.dump() << '\n';
  };
  add("constants.json");
  add("verify_report.json");
  add("simulate_summary.json");
  if (txt.str().empty())
    throw mz::ValidationError("report: no artifacts found in " +
                              ctx.out.string());
  std::ofstream out(ctx.artifact("report.txt"));
  out << txt.str();
  std::cout << txt.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified ReLU-network distillation of constrained linear MPC"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  std::int64_t seed_override = -1;
  app.add_option("--config", config_path, "JSON run configuration")
      ->required();
  app.add_option("--output", output_override, "override config output_dir");
  app.add_option("--seed", seed_override, "override config seed");

  const std::vector<std::string> names = {"constants", "bounds", "dataset",
                                          "train",     "verify", "simulate",
                                          "report"};
  for (const auto& n : names) app.add_subcommand(n)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  RunContext ctx;
  try {
    ctx.config_path = config_path;
    ctx.config = mz::serialize::load_json(config_path);
    ctx.out = output_override.empty()
                  ? fs::path(cfg_get<std::string>(ctx.config, "output_dir", "out"))
                  : fs::path(output_override);
    fs::create_directories(ctx.out);
    ctx.seed = seed_override >= 0
                   ? static_cast<std::uint64_t>(seed_override)
                   : cfg_get<std::uint64_t>(ctx.config, "seed", 0);

    const std::string sub = app.get_subcommands().front()->get_name();
    int rc;
    if (sub == "constants") rc = run_constants(ctx);
    else if (sub == "bounds") rc = run_bounds(ctx);
    else if (sub == "dataset") rc = run_dataset(ctx);
    else if (sub == "train") rc = run_train(ctx);
    else if (sub == "verify") rc = run_verify(ctx);
    else if (sub == "simulate") rc = run_simulate(ctx);
    else rc = run_report(ctx);
    write_manifest(ctx, sub);
    return rc;
  } catch (const mz::ValidationError& e) {
    ctx.cleanup_partial();
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    ctx.cleanup_partial();
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
