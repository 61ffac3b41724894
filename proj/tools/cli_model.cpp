#include "cli_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace gibbs::cli {

const ConfigSchema& schema() {
  static const ConfigSchema s{
      {"run", {"seed", "output", "threads", "name"}},
      {"space", {"kind", "resolution", "basis_order", "lo", "hi", "dim", "density", "probabilities"}},
      {"kernel", {"type", "scale", "s", "value", "table", "expression", "truncation", "charge"}},
      {"beta", {"schedule", "value", "expression", "limit"}},
      {"euclidean", {"mode", "v", "xi", "epsilon", "resolution"}},
      {"environment", {"stream", "type", "scale"}},
      {"green", {"truncation", "charge", "trials", "threshold"}},
      {"equilibrium", {"beta", "max_steps", "tolerance", "reference", "tilt"}},
      {"sampler", {"n", "steps", "proposal_scale", "burn_in", "thin", "autotune", "ladder",
                   "swap_interval", "check_interval", "ess_floor"}},
      {"fekete", {"n", "restarts", "max_iterations", "ns", "threshold", "polish", "f"}},
      {"ldp", {"mode", "ns", "threshold", "f", "rungs", "steps", "ess_floor", "batches",
               "proposal_scale", "limit", "ladder"}},
      {"rate", {"beta", "g", "c", "strict", "ns", "threshold"}},
      {"conditional", {"mode", "v", "v_n", "beta_n", "lambda_n", "self", "f", "ns", "threshold"}},
  };
  return s;
}

std::function<double(const Point&)> point_function(const std::string& source) {
  auto e = std::make_shared<Expression>(source, std::vector<std::string>{"x", "y", "z"});
  return [e](const Point& p) { return (*e)({p.c[0], p.c[1], p.c[2]}); };
}

std::shared_ptr<const Space> build_space(const Config& c) {
  const auto kind = space_kind_from_string(c.get_string("space", "kind"));
  if (kind == SpaceKind::Finite) {
    auto probs = c.get_doubles("space", "probabilities");
    return Space::finite(probs);
  }
  if (kind == SpaceKind::Box) {
    DensityFunction density;
    if (c.has("space", "density")) density = point_function(c.get_string("space", "density"));
    return Space::box(c.get_double("space", "lo"), c.get_double("space", "hi"),
                      int(c.get_int("space", "dim", 1)), int(c.get_int("space", "resolution")),
                      density);
  }
  return Space::manifold(kind, int(c.get_int("space", "resolution")),
                         int(c.get_int("space", "basis_order", 8)));
}

BackgroundCharge build_charge(const Config& c, const Space& space, const std::string& section) {
  const auto src = c.get_string(section, "charge", "uniform");
  if (src == "uniform") return BackgroundCharge::uniform(space);
  return BackgroundCharge::from_function(space, point_function(src));
}

PairKernelPtr build_pair_kernel(const Config& c, std::shared_ptr<const Space> space,
                                const std::string& section) {
  const auto type = c.get_string(section, "type");
  if (type == "log") return std::make_shared<LogChordKernel>(space, c.get_double(section, "scale", 1.0));
  if (type == "riesz") return std::make_shared<RieszKernel>(space, c.get_double(section, "s"));
  if (type == "constant") return std::make_shared<ConstantPairKernel>(c.get_double(section, "value"));
  if (type == "product-norm") return std::make_shared<ProductNormKernel>();
  if (type == "expression")
    return std::make_shared<ExpressionKernel>(c.get_string(section, "expression"));
  if (type == "green") {
    auto charge = build_charge(c, *space, section);
    auto model = std::make_shared<GreenModel>(space, charge,
                                              int(c.get_int(section, "truncation", space->basis_order())));
    return std::make_shared<GreenKernel>(model);
  }
  if (type == "table") {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(c.get_string(section, "table"));
    std::string row;
    while (std::getline(ss, row, ';')) {
      Config one;
      one.set("t", "r", row);
      rows.push_back(one.get_doubles("t", "r"));
    }
    return std::make_shared<TableKernel>(rows);
  }
  const auto* e = c.find(section, "type");
  fail(ErrorCode::Format, c.origin() + ":" + std::to_string(e->line) + ":" + std::to_string(e->column) +
                              ": unknown kernel type '" + type +
                              "' (log, riesz, green, table, constant, expression, product-norm)");
}

BetaSchedule build_beta(const Config& c) {
  const auto kind = c.get_string("beta", "schedule", "constant");
  if (kind == "constant") return BetaSchedule::constant(c.get_double("beta", "value", 1.0));
  if (kind == "linear") return BetaSchedule::linear(c.get_double("beta", "value", 1.0));
  if (kind == "expression")
    return BetaSchedule::expression(c.get_string("beta", "expression"), c.get_double("beta", "limit"));
  const auto* e = c.find("beta", "schedule");
  fail(ErrorCode::Format, c.origin() + ":" + std::to_string(e->line) + ":" + std::to_string(e->column) +
                              ": unknown beta schedule '" + kind + "' (constant, linear, expression)");
}

EnergyModel build_model(const Config& c) {
  auto space = build_space(c);
  EnergyModel model(space, build_pair_kernel(c, space), build_beta(c));
  if (c.has_section("euclidean")) {
    EuclideanData d;
    const auto mode = c.get_string("euclidean", "mode", "weak");
    require(mode == "weak" || mode == "strong", ErrorCode::Format,
            "[euclidean] mode must be weak or strong");
    d.mode = mode == "weak" ? EuclideanData::Mode::Weak : EuclideanData::Mode::Strong;
    d.v = Potential(c.get_string("euclidean", "v"));
    d.xi = c.get_double("euclidean", "xi", 1.0);
    d.epsilon = c.get_double("euclidean", "epsilon", 0.0);
    model = euclidean_transform(model, d, int(c.get_int("euclidean", "resolution", 0)));
  }
  if (c.has_section("environment")) {
    const auto stream = c.get_string("environment", "stream", "equispaced");
    require(stream == "equispaced", ErrorCode::Format,
            "[environment] stream supports 'equispaced' (offset half a spacing)");
    require(space->kind() == SpaceKind::Circle, ErrorCode::UnsupportedKind,
            "the equispaced environment lives on the circle");
    Environment env;
    env.stream = [](int n) {
      std::vector<Point> pts;
      for (int j = 0; j < n; ++j) pts.push_back(Point{{2.0 * std::numbers::pi * (j + 0.5) / n, 0, 0}});
      return pts;
    };
    env.limit = GridMeasure::uniform(model.space_ptr());
    model = model.with_external(build_pair_kernel(c, model.space_ptr(), "environment"), env);
  }
  return model;
}

Functional build_functional(const Config& c, const std::string& section) {
  if (!c.has(section, "f")) return {};
  const auto src = c.get_string(section, "f");
  return Functional::integral(point_function(src), src);
}

double parse_beta(const Config& c, const std::string& section, const std::string& key,
                  double fallback) {
  if (!c.has(section, key)) return fallback;
  const auto* e = c.find(section, key);
  if (e->value == "inf") return kInf;
  const double b = c.get_double(section, key);
  if (!(b > 0.0))
    fail(ErrorCode::Format, c.origin() + ":" + std::to_string(e->line) + ":" + std::to_string(e->column) +
                                ": '" + key + "' must be positive or inf");
  return b;
}

Json echo(const Config& c) {
  Json j = Json::object();
  for (const auto& s : c.sections()) {
    Json sec = Json::object();
    for (const auto& e : s.entries)
      if (!(s.name == "run" && e.key == "output")) sec[e.key] = e.value;
    j[s.name] = sec;
  }
  return j;
}

Json num(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

}  // namespace gibbs::cli
