#pragma once

// Builds library objects from a validated run configuration.

#include <memory>
#include <optional>
#include <string>

#include "gibbslab/config.hpp"
#include "gibbslab/energy.hpp"
#include "gibbslab/fekete.hpp"
#include "gibbslab/output.hpp"

namespace gibbs::cli {

const ConfigSchema& schema();

std::shared_ptr<const Space> build_space(const Config& c);
/// Background charge of [green] (or [kernel] for green kernels): "uniform"
/// or a density expression in x y z.
BackgroundCharge build_charge(const Config& c, const Space& space, const std::string& section);
PairKernelPtr build_pair_kernel(const Config& c, std::shared_ptr<const Space> space,
                                const std::string& section = "kernel");
BetaSchedule build_beta(const Config& c);
/// Space, kernel, beta, then [euclidean] and [environment] when present.
EnergyModel build_model(const Config& c);

/// Expression in x y z as a point function.
std::function<double(const Point&)> point_function(const std::string& source);
/// [section] f as an integral functional; empty when absent.
Functional build_functional(const Config& c, const std::string& section);

/// "inf" or a positive number.
double parse_beta(const Config& c, const std::string& section, const std::string& key,
                  double fallback);

/// Config echoed as {section: {key: value}}, minus the output directory so
/// reruns elsewhere give identical bodies.
Json echo(const Config& c);
/// Number as JSON, non-finite values as strings.
Json num(double v);

}  // namespace gibbs::cli
