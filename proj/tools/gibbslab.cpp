// gibbslab: command-line driver. Every subcommand reads a strict config,
// writes result.json (plus CSV/SVG) and manifest.json into the output
// directory, and exits 0 on pass, 2 on a failed verdict, 1 on error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "cli_model.hpp"
#include "gibbslab/equilibrium.hpp"
#include "gibbslab/fekete.hpp"
#include "gibbslab/ldp.hpp"
#include "gibbslab/sampler.hpp"

using namespace gibbs;
using gibbs::cli::num;

namespace {

struct Run {
  Config cfg;
  std::string command;
  std::string started;
  std::uint64_t seed = 0;
  int threads = 0;
  std::unique_ptr<RunWriter> out;
};

struct Common {
  std::string config;
  std::string output;
  int n = 0;
};

std::string fixed7(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.7f", v);
  return buf;
}

Run open_run(const std::string& command, const Common& args) {
  Run r;
  r.command = command;
  r.started = utc_now();
  r.cfg = Config::load(args.config);
  r.cfg.validate(cli::schema());
  // Environment overrides: output directory and thread count only.
  if (const char* o = std::getenv("GIBBSLAB_OUTPUT"); o && *o) r.cfg.set("run", "output", o);
  if (const char* t = std::getenv("GIBBSLAB_THREADS"); t && *t) r.cfg.set("run", "threads", t);
  if (!args.output.empty()) r.cfg.set("run", "output", args.output);
  require(r.cfg.has("run", "seed"), ErrorCode::Format,
          r.cfg.origin() + ": [run] seed is required (no wall-clock default)");
  r.seed = std::uint64_t(r.cfg.get_int("run", "seed"));
  r.threads = int(r.cfg.get_int("run", "threads", 0));
  require(r.threads >= 0, ErrorCode::Format, "[run] threads must be nonnegative");
  r.out = std::make_unique<RunWriter>(r.cfg.get_string("run", "output", "out/" + command));
  return r;
}

int finish(Run& r, Json result, bool passes) {
  Json doc;
  doc["command"] = r.command;
  doc["inputs"] = cli::echo(r.cfg);
  for (auto& [k, v] : result.items()) doc[k] = v;
  doc["passes"] = passes;
  r.out->write("result.json", doc.dump(2) + "\n");
  for (const char* kind : {"density", "gaps", "points"})
    if (doc.contains("plots") && doc["plots"].contains(kind))
      r.out->write(std::string(kind) + ".svg", plot_emit(doc, kind));
  const auto hash = hex64(fnv1a64(r.cfg.serialize()));
  r.out->write_manifest(r.out->manifest(r.command, hash, r.started, utc_now()));
  std::cout << (passes ? "PASS" : "FAIL") << "  outputs in " << r.out->directory() << "\n";
  return passes ? 0 : 2;
}

Json verdict_json(const LaplaceVerdict& v) {
  Json j;
  j["ns"] = v.ns;
  Json values = Json::array(), errors = Json::array(), gaps = Json::array();
  for (std::size_t i = 0; i < v.ns.size(); ++i) {
    values.push_back(num(v.values[i]));
    errors.push_back(num(v.errors[i]));
    gaps.push_back(num(v.gaps[i]));
  }
  j["values"] = values;
  j["errors"] = errors;
  j["limit"] = num(v.limit);
  if (!v.limit_refinements.empty()) {
    Json refs = Json::array();
    for (double x : v.limit_refinements) refs.push_back(num(x));
    j["limit_refinements"] = refs;
  }
  j["gaps"] = gaps;
  j["slope"] = num(v.slope);
  j["threshold"] = v.threshold;
  j["advisory"] = v.advisory;
  return j;
}

std::string verdict_csv(const LaplaceVerdict& v) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < v.ns.size(); ++i)
    rows.push_back({std::to_string(v.ns[i]), format_number(v.values[i]), format_number(v.errors[i]),
                    format_number(v.gaps[i])});
  return to_csv({"n", "L_n", "error", "gap"}, rows);
}

Json gaps_plot(const std::vector<int>& ns, const std::vector<double>& gaps) {
  Json g;
  g["n"] = ns;
  Json gs = Json::array();
  for (double x : gaps) gs.push_back(num(x));
  g["gap"] = gs;
  return g;
}

Json points_plot(const Space& s, const std::vector<Point>& pts) {
  Json p;
  std::vector<double> a, b;
  for (const auto& q : pts) {
    if (s.kind() == SpaceKind::Sphere) {
      a.push_back(std::atan2(q.c[1], q.c[0]));
      b.push_back(std::asin(std::clamp(q.c[2], -1.0, 1.0)));
    } else {
      a.push_back(q.c[0]);
      b.push_back(s.dimension() >= 2 ? q.c[1] : 0.0);
    }
  }
  p["space"] = to_string(s.kind());
  p["a"] = a;
  p["b"] = b;
  if (s.kind() == SpaceKind::Sphere) {
    p["a_label"] = "longitude";
    p["b_label"] = "latitude";
  }
  return p;
}

std::string points_csv(const std::vector<Point>& pts) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < pts.size(); ++i)
    rows.push_back({std::to_string(i), format_number(pts[i].c[0]), format_number(pts[i].c[1]),
                    format_number(pts[i].c[2])});
  return to_csv({"i", "c0", "c1", "c2"}, rows);
}

// ---------------------------------------------------------------------------

int green_check(const Common& args) {
  Run r = open_run("green-check", args);
  const auto& c = r.cfg;
  auto space = cli::build_space(c);
  require(space->has_basis(), ErrorCode::UnsupportedKind, "green-check needs a circle, torus or sphere");
  const int truncation = int(c.get_int("green", "truncation", space->basis_order()));
  GreenModel g(space, cli::build_charge(c, *space, "green"), truncation);
  const int trials = int(c.get_int("green", "trials", 100));
  const double threshold = c.get_double("green", "threshold", 1e-6);
  auto rng = make_stream(r.seed, "green-check");
  const std::size_t count = space->basis_count_up_to(truncation);
  std::vector<std::vector<std::string>> rows;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Point x = space->sample_reference(rng);
    std::vector<double> coeffs(count);
    for (double& a : coeffs) a = standard_normal(rng);
    const double res = g.identity_residual(coeffs, x);
    worst = std::max(worst, res);
    rows.push_back({std::to_string(t), format_number(x.c[0]), format_number(x.c[1]),
                    format_number(x.c[2]), format_number(res)});
  }
  r.out->write("residuals.csv", to_csv({"trial", "c0", "c1", "c2", "residual"}, rows));
  std::cout << "max residual " << format_number(worst) << " over " << trials << " trials\n";
  Json res;
  res["max_residual"] = worst;
  res["threshold"] = threshold;
  res["trials"] = trials;
  return finish(r, res, worst < threshold);
}

int equilibrium(const Common& args) {
  Run r = open_run("equilibrium", args);
  const auto& c = r.cfg;
  auto model = cli::build_model(c);
  const double beta = cli::parse_beta(c, "equilibrium", "beta", model.beta().limit());
  FreeEnergyModel fm(model, beta);
  EquilibriumOptions opt;
  opt.max_steps = int(c.get_int("equilibrium", "max_steps", opt.max_steps));
  opt.tolerance = c.get_double("equilibrium", "tolerance", opt.tolerance);
  const auto& s = model.space();
  if (c.has("equilibrium", "tilt")) {
    auto t = cli::point_function(c.get_string("equilibrium", "tilt"));
    for (const auto& p : s.nodes()) opt.tilt.push_back(t(p));
  }
  auto eq = minimize_free_energy(fm, GridMeasure::uniform(model.space_ptr()), opt);
  const auto m = eq.mu.masses();
  const std::string reference = c.get_string("equilibrium", "reference", "none");
  require(reference == "none" || reference == "semicircle", ErrorCode::Format,
          "[equilibrium] reference must be none or semicircle");
  require(reference == "none" || (s.kind() == SpaceKind::Box && s.dimension() == 1),
          ErrorCode::UnsupportedKind, "the semicircle reference needs a 1D box");

  std::vector<double> xs, lebesgue, ref;
  std::vector<std::vector<std::string>> rows;
  double l1 = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = s.node(i).c[0];
    const double dens = m[i] / s.cell_size(i);
    xs.push_back(x);
    lebesgue.push_back(dens);
    std::vector<std::string> row{std::to_string(i), format_number(x), format_number(m[i]),
                                 format_number(eq.mu.density()[i]), format_number(dens)};
    if (reference == "semicircle") {
      const double e = std::fabs(x) < 2.0 ? std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi) : 0.0;
      ref.push_back(e);
      l1 += std::fabs(dens - e) * s.cell_size(i);
      row.push_back(format_number(e));
    }
    rows.push_back(row);
  }
  std::vector<std::string> head{"node", "x", "mass", "density_pi", "density_cell"};
  if (reference == "semicircle") head.push_back("semicircle");
  r.out->write("density.csv", to_csv(head, rows));

  Json res;
  res["beta"] = num(beta);
  res["value"] = num(eq.value);
  res["optimality_gap"] = num(eq.optimality_gap);
  res["residual"] = num(eq.residual);
  res["iterations"] = eq.iterations;
  res["converged"] = eq.converged;
  bool passes = eq.converged;
  std::cout << "F(mu_eq) " << format_number(eq.value) << " after " << eq.iterations << " steps\n";
  if (reference == "semicircle") {
    res["l1_to_reference"] = l1;
    passes = l1 < 0.02;
    std::cout << "L1 distance to the semicircle " << format_number(l1) << "\n";
  }
  if (s.dimension() == 1) {
    Json d;
    d["x"] = xs;
    d["density"] = lebesgue;
    if (!ref.empty()) {
      d["reference"] = ref;
      d["reference_label"] = "semicircle";
    }
    res["plots"]["density"] = d;
  }
  return finish(r, res, passes);
}

int sample(const Common& args) {
  Run r = open_run("sample", args);
  const auto& c = r.cfg;
  auto model = cli::build_model(c);
  const int n = args.n > 0 ? args.n : int(c.get_int("sampler", "n"));
  SamplerOptions so;
  so.seed = r.seed;
  so.steps = c.get_int("sampler", "steps", so.steps);
  so.proposal_scale = c.get_double("sampler", "proposal_scale", so.proposal_scale);
  so.burn_in_fraction = c.get_double("sampler", "burn_in", so.burn_in_fraction);
  so.thin = c.get_int("sampler", "thin", 0);
  so.autotune = c.get_bool("sampler", "autotune", true);
  so.ladder = c.get_doubles("sampler", "ladder", std::vector<double>{});
  so.swap_interval = c.get_int("sampler", "swap_interval", so.swap_interval);
  so.check_interval = c.get_int("sampler", "check_interval", so.check_interval);
  const double ess_floor = c.get_double("sampler", "ess_floor", 50.0);
  auto rep = mcmc_run(model, n, so);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < rep.energies.size(); ++i)
    rows.push_back({std::to_string(i), format_number(rep.energies[i])});
  r.out->write("energies.csv", to_csv({"sample", "energy"}, rows));
  if (!rep.samples.empty()) r.out->write("final.csv", points_csv(rep.samples.back()));
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  const auto est = batch_means(rep.energies);
  std::cout << "mean W_n " << format_number(est.mean) << " +- " << format_number(est.standard_error)
            << ", acceptance " << format_number(rep.acceptance_rate) << ", ESS "
            << format_number(rep.effective_sample_size) << "\n";
  Json res;
  res["n"] = n;
  res["steps"] = rep.steps;
  res["burn_in"] = rep.burn_in;
  res["thin"] = rep.thin;
  res["mean_energy"] = num(est.mean);
  res["standard_error"] = num(est.standard_error);
  res["acceptance_rate"] = rep.acceptance_rate;
  res["proposal_scale"] = rep.proposal_scale;
  res["autocorrelation_time"] = num(rep.autocorrelation_time);
  res["effective_sample_size"] = num(rep.effective_sample_size);
  res["swap_acceptance"] = rep.swap_acceptance;
  res["cache_checks"] = rep.cache_checks;
  res["warnings"] = rep.warnings;
  res["ess_floor"] = ess_floor;
  if (!rep.samples.empty()) res["plots"]["points"] = points_plot(model.space(), rep.samples.back());
  return finish(r, res, rep.effective_sample_size >= ess_floor);
}

FeketeOptions fekete_options(const Run& r) {
  FeketeOptions o;
  o.seed = r.seed;
  o.threads = r.threads;
  o.restarts = int(r.cfg.get_int("fekete", "restarts", o.restarts));
  o.max_iterations = int(r.cfg.get_int("fekete", "max_iterations", o.max_iterations));
  o.polish = r.cfg.get_bool("fekete", "polish", true);
  return o;
}

int fekete(const Common& args) {
  Run r = open_run("fekete", args);
  const auto& c = r.cfg;
  auto model = cli::build_model(c);
  const auto f = cli::build_functional(c, "fekete");
  const auto opt = fekete_options(r);
  Json res;
  if (args.n == 0 && c.has("fekete", "ns")) {
    const auto ns = c.get_ints("fekete", "ns");
    const double threshold = c.get_double("fekete", "threshold");
    auto t = infima_convergence_table(model, ns, threshold, f, opt);
    std::vector<std::vector<std::string>> rows;
    std::vector<double> gaps;
    Json jr = Json::array();
    for (const auto& row : t.rows) {
      rows.push_back({std::to_string(row.n), format_number(row.inf_n), format_number(row.inf_macro),
                      format_number(row.gap)});
      gaps.push_back(row.gap);
      jr.push_back({{"n", row.n}, {"inf_n", num(row.inf_n)}, {"gap", num(row.gap)}});
      std::cout << "n " << row.n << "  inf W_n " << fixed7(row.inf_n) << "  gap " << format_number(row.gap) << "\n";
    }
    r.out->write("infima.csv", to_csv({"n", "inf_n", "inf_macro", "gap"}, rows));
    res["rows"] = jr;
    res["macro"] = num(t.macro);
    res["slope"] = num(t.slope);
    res["threshold"] = t.threshold;
    res["plots"]["gaps"] = gaps_plot(ns, gaps);
    return finish(r, res, t.passes);
  }
  const int n = args.n > 0 ? args.n : int(c.get_int("fekete", "n"));
  auto best = fekete_minimize(model, n, f, opt);
  std::cout << fixed7(best.value) << "\n";
  for (const auto& note : best.notes) std::cerr << "note: " << note << "\n";
  r.out->write("points.csv", points_csv(best.best));
  Json finals = Json::array();
  for (double v : best.finals) finals.push_back(num(v));
  res["n"] = n;
  res["value"] = num(best.value);
  res["w_n"] = num(best.w_n);
  res["restarts"] = best.restarts;
  res["finals"] = finals;
  res["gradient_norm"] = num(best.gradient_norm);
  res["exhaustive"] = best.exhaustive;
  res["notes"] = best.notes;
  res["plots"]["points"] = points_plot(model.space(), best.best);
  return finish(r, res, std::isfinite(best.value));
}

McOptions mc_options(const Run& r) {
  McOptions o;
  o.seed = r.seed;
  o.threads = r.threads;
  o.rungs = int(r.cfg.get_int("ldp", "rungs", o.rungs));
  o.steps = r.cfg.get_int("ldp", "steps", o.steps);
  o.ess_floor = r.cfg.get_double("ldp", "ess_floor", o.ess_floor);
  o.batches = int(r.cfg.get_int("ldp", "batches", o.batches));
  o.proposal_scale = r.cfg.get_double("ldp", "proposal_scale", o.proposal_scale);
  o.ladder = r.cfg.get_doubles("ldp", "ladder", std::vector<double>{});
  return o;
}

int laplace_verify(const Common& args) {
  Run r = open_run("laplace-verify", args);
  const auto& c = r.cfg;
  auto model = cli::build_model(c);
  const auto f = cli::build_functional(c, "ldp");
  const auto ns = c.get_ints("ldp", "ns");
  const double threshold = c.get_double("ldp", "threshold");
  const bool finite = model.space().kind() == SpaceKind::Finite;
  const std::string mode = c.get_string("ldp", "mode", finite ? "exact" : "mc");
  require(mode == "exact" || mode == "mc", ErrorCode::Format, "[ldp] mode must be exact or mc");
  std::optional<double> limit;
  if (c.has("ldp", "limit")) limit = c.get_double("ldp", "limit");
  LaplaceVerdict v = mode == "exact" ? laplace_verify_finite(model, f, ns, threshold)
                                     : laplace_estimate_mc(model, f, ns, threshold, mc_options(r), limit);
  for (std::size_t i = 0; i < ns.size(); ++i)
    std::cout << "n " << ns[i] << "  L_n " << format_number(v.values[i]) << "  gap "
              << format_number(v.gaps[i]) << (v.advisory ? "  +- " + format_number(v.errors[i]) : "") << "\n";
  std::cout << "limit " << format_number(v.limit) << "  slope " << format_number(v.slope) << "\n";
  r.out->write("laplace.csv", verdict_csv(v));
  Json res = verdict_json(v);
  res["plots"]["gaps"] = gaps_plot(v.ns, v.gaps);
  return finish(r, res, v.passes);
}

int rate_profile(const Common& args) {
  Run r = open_run("rate-profile", args);
  const auto& c = r.cfg;
  auto model = cli::build_model(c);
  const double beta = cli::parse_beta(c, "rate", "beta", model.beta().limit());
  const auto& s = model.space();
  std::optional<LinearConstraint> set;
  if (c.has("rate", "g")) {
    LinearConstraint lc;
    auto g = cli::point_function(c.get_string("rate", "g"));
    for (const auto& p : s.nodes()) lc.g.push_back(g(p));
    lc.c = c.get_double("rate", "c");
    lc.strict = c.get_bool("rate", "strict", false);
    set = lc;
  }
  auto p = rate_function_profile(model, beta, set);
  std::cout << "inf I over the set " << format_number(p.value) << (p.active ? " (constraint active)" : "")
            << "\n";
  const auto m = p.witness.masses();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < s.size(); ++i)
    rows.push_back({std::to_string(i), format_number(s.node(i).c[0]), format_number(m[i])});
  r.out->write("witness.csv", to_csv({"node", "x", "mass"}, rows));
  Json res;
  res["value"] = num(p.value);
  res["inf_free_energy"] = num(p.inf_free_energy);
  res["multiplier"] = num(p.multiplier);
  res["active"] = p.active;
  res["grid_value"] = num(p.grid_value);
  if (set && c.has("rate", "ns")) {
    const auto ns = c.get_ints("rate", "ns");
    std::vector<double> decay, gaps;
    std::vector<std::vector<std::string>> drows;
    for (int n : ns) {
      decay.push_back(enumerated_decay(model, n, *set));
      gaps.push_back(std::fabs(decay.back() - p.value));
      drows.push_back({std::to_string(n), format_number(decay.back())});
    }
    r.out->write("decay.csv", to_csv({"n", "decay"}, drows));
    Json d = Json::array();
    for (double x : decay) d.push_back(num(x));
    res["ns"] = ns;
    res["decay"] = d;
    res["plots"]["gaps"] = gaps_plot(ns, gaps);
    if (c.has("rate", "threshold")) {
      // Verdict: the enumerated decay at the largest n is within threshold.
      const double threshold = c.get_double("rate", "threshold");
      res["threshold"] = threshold;
      return finish(r, res, gaps.back() < threshold);
    }
  }
  return finish(r, res, std::isfinite(p.value));
}

int conditional(const Common& args) {
  Run r = open_run("conditional", args);
  const auto& c = r.cfg;
  const std::string mode = c.get_string("conditional", "mode");
  const auto ns = c.get_ints("conditional", "ns");
  const double threshold = c.get_double("conditional", "threshold");
  LaplaceVerdict v;
  if (mode == "particle") {
    OneParticleModel m;
    m.space = cli::build_space(c);
    m.v = cli::point_function(c.get_string("conditional", "v"));
    if (c.has("conditional", "f")) m.f = cli::point_function(c.get_string("conditional", "f"));
    if (c.has("conditional", "self")) m.self_energy = cli::point_function(c.get_string("conditional", "self"));
    if (c.has("conditional", "v_n")) {
      auto e = std::make_shared<Expression>(c.get_string("conditional", "v_n"),
                                            std::vector<std::string>{"x", "y", "z", "n"});
      m.v_n = [e](int n, const Point& p) { return (*e)({p.c[0], p.c[1], p.c[2], double(n)}); };
    } else {
      auto v0 = m.v;
      m.v_n = [v0](int, const Point& p) { return v0(p); };
    }
    auto of_n = [&](const char* key, const char* fallback) {
      auto e = std::make_shared<Expression>(c.get_string("conditional", key, fallback),
                                            std::vector<std::string>{"n"});
      return std::function<double(int)>([e](int n) { return (*e)({double(n)}); });
    };
    m.beta_n = of_n("beta_n", "n");
    m.lambda_n = of_n("lambda_n", "0");
    v = conditional_particle_verify(m, ns, threshold);
    Json w = Json::array();
    for (const auto& p : v.witnesses) w.push_back({p.c[0], p.c[1], p.c[2]});
    Json res = verdict_json(v);
    res["mode"] = mode;
    res["witnesses"] = w;
    res["plots"]["gaps"] = gaps_plot(v.ns, v.gaps);
    r.out->write("conditional.csv", verdict_csv(v));
    for (std::size_t i = 0; i < ns.size(); ++i)
      std::cout << "n " << ns[i] << "  value " << format_number(v.values[i]) << "  gap "
                << format_number(v.gaps[i]) << "  argmax " << format_number(v.witnesses[i].c[0]) << "\n";
    return finish(r, res, v.passes);
  }
  require(mode == "gas", ErrorCode::Format, "[conditional] mode must be particle or gas");
  auto model = cli::build_model(c);
  std::optional<double> limit;
  if (c.has("ldp", "limit")) limit = c.get_double("ldp", "limit");
  v = conditional_gas_verify(model, cli::build_functional(c, "conditional"), ns, threshold, mc_options(r),
                             limit);
  for (std::size_t i = 0; i < ns.size(); ++i)
    std::cout << "n " << ns[i] << "  L_n " << format_number(v.values[i]) << " +- "
              << format_number(v.errors[i]) << "  gap " << format_number(v.gaps[i]) << "\n";
  r.out->write("conditional.csv", verdict_csv(v));
  Json res = verdict_json(v);
  res["mode"] = mode;
  res["plots"]["gaps"] = gaps_plot(v.ns, v.gaps);
  return finish(r, res, v.passes);
}

int plot(const std::string& input, const std::string& kind, const std::string& output) {
  std::ifstream f(input, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot open result file '" + input + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  require(!ss.str().empty(), ErrorCode::Format, "result file '" + input + "' is empty");
  Json doc;
  try {
    doc = Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Format, "result file '" + input + "' is not JSON: " + e.what());
  }
  // Render before touching the output path so failures leave no file.
  const std::string svg = plot_emit(doc, kind);
  std::ofstream o(output, std::ios::binary | std::ios::trunc);
  if (!o) fail(ErrorCode::Io, "cannot write '" + output + "'");
  o << svg;
  std::cout << "wrote " << output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gibbslab: Gibbs measures, equilibrium, sampling, Fekete points and large deviations"};
  app.require_subcommand(1);
  Common common;
  auto add = [&](const std::string& name, const std::string& help, bool with_n) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config,-c", common.config, "run configuration")->required()->check(CLI::ExistingFile);
    s->add_option("--output,-o", common.output, "output directory (overrides config and environment)");
    if (with_n) s->add_option("--n", common.n, "particle number")->check(CLI::PositiveNumber);
    return s;
  };
  auto* c_green = add("green-check", "Green identity residuals on a manifold", false);
  auto* c_eq = add("equilibrium", "minimize the free energy by mirror descent", false);
  auto* c_sample = add("sample", "Metropolis-Hastings sampling of the Gibbs measure", true);
  auto* c_fekete = add("fekete", "minimize W_n, or tabulate inf W_n against inf W", true);
  auto* c_laplace = add("laplace-verify", "Laplace principle check (exact or Monte Carlo)", false);
  auto* c_rate = add("rate-profile", "constrained infimum of the rate function", false);
  auto* c_cond = add("conditional", "particle or gas in a varying environment", false);
  std::string input, kind, output;
  auto* c_plot = app.add_subcommand("plot", "render an SVG from a result file");
  c_plot->add_option("--input,-i", input, "result.json of a previous run")->required();
  c_plot->add_option("--kind,-k", kind, "density, gaps or points")->required();
  c_plot->add_option("--output,-o", output, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    if (c_green->parsed()) return green_check(common);
    if (c_eq->parsed()) return equilibrium(common);
    if (c_sample->parsed()) return sample(common);
    if (c_fekete->parsed()) return fekete(common);
    if (c_laplace->parsed()) return laplace_verify(common);
    if (c_rate->parsed()) return rate_profile(common);
    if (c_cond->parsed()) return conditional(common);
    if (c_plot->parsed()) return plot(input, kind, output);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
