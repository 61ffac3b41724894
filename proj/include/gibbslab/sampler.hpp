#pragma once

// Metropolis-Hastings sampling of P_n proportional to exp(-n beta_n W_n)
// d pi^n with single-particle moves and an optional tempering ladder, and
// exact enumeration of P_n over type classes on finite spaces.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gibbslab/energy.hpp"
#include "gibbslab/rng.hpp"

namespace gibbs {

/// Optional one-body field h: the chain then targets
/// exp(-t n beta_n (W_n + (1/n) sum_i h(x_i))).
using Field = std::function<double(const Point&)>;

/// One replica: configuration, cached energy, and the multiplier t applied
/// to n beta_n (t = 1 is the target).
class Chain {
 public:
  Chain(const EnergyModel& model, int n, double multiplier, double scale, Rng rng,
        Field field = {});

  /// One single-particle proposal. Returns whether it was accepted.
  bool step();
  /// Recomputes the energy and throws CacheIncoherent on disagreement beyond 1e-9.
  void check_cache() const;

  const std::vector<Point>& config() const { return config_; }
  /// W_n plus the field term.
  double energy() const { return energy_; }
  double recompute() const;
  double multiplier() const { return multiplier_; }
  /// n beta_n times the multiplier.
  double inverse_temperature() const { return multiplier_ * nbeta_; }
  double scale() const { return scale_; }
  void set_scale(double s) { scale_ = s; }
  std::uint64_t proposed() const { return proposed_; }
  std::uint64_t accepted() const { return accepted_; }
  void reset_counters() { proposed_ = accepted_ = 0; }

  /// Exchanges configurations (and cached energies) between two replicas.
  void swap_state(Chain& other);

 private:
  const EnergyModel* model_;
  int n_;
  double multiplier_;
  double nbeta_;
  double scale_;
  Rng rng_;
  Field field_;
  std::vector<Point> config_;
  double energy_ = 0.0;
  std::uint64_t proposed_ = 0, accepted_ = 0;
  std::uint64_t infinite_run_ = 0;
};

struct SamplerOptions {
  /// Single-particle proposals per replica, burn-in included.
  std::int64_t steps = 100000;
  double proposal_scale = 0.3;
  std::uint64_t seed = 1;
  double burn_in_fraction = 0.2;
  /// Keep every thin-th state after burn-in; 0 means ceil(steps / 2000).
  std::int64_t thin = 0;
  bool autotune = true;
  /// Tempering multipliers, the first must be 1. Empty: no tempering.
  std::vector<double> ladder;
  std::int64_t swap_interval = 100;
  std::int64_t check_interval = 1000;
  /// Base multiplier t0: level r targets exp(-t0 ladder[r] n beta_n E).
  double multiplier = 1.0;
  Field field;
};

/// Geometric ladder 1, r, r^2, ..., r^(size-1) = t_min.
std::vector<double> geometric_ladder(int size, double t_min);

struct ChainReport {
  int n = 0;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  std::int64_t burn_in = 0;
  std::int64_t thin = 0;
  /// Thinned target-replica configurations (each one an empirical measure).
  std::vector<std::vector<Point>> samples;
  /// W_n (plus the field term) of each thinned sample.
  std::vector<double> energies;
  /// Post-burn-in acceptance of the target replica.
  double acceptance_rate = 0.0;
  double proposal_scale = 0.0;
  /// Integrated autocorrelation time of W_n on the thinned series.
  double autocorrelation_time = 1.0;
  double effective_sample_size = 0.0;
  /// Swap acceptance between ladder levels i and i + 1.
  std::vector<double> swap_acceptance;
  std::int64_t cache_checks = 0;
  std::vector<std::string> warnings;
};

ChainReport mcmc_run(const EnergyModel& model, int n, const SamplerOptions& options = {});

/// Sokal's windowed integrated autocorrelation time (window c = 5).
double integrated_autocorrelation(const std::vector<double>& series);

/// Mean and batch-means standard error of a series.
struct SeriesEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};
SeriesEstimate batch_means(const std::vector<double>& series, int batches = 20);

/// Calls visit(counts, config, log_multiplicity) for every type class of n
/// particles on a finite space; config lists atoms in order. The
/// multiplicity is n! / prod n_a! times prod pi_a^n_a.
void for_each_type_class(
    const Space& space, int n,
    const std::function<void(const std::vector<int>&, const std::vector<Point>&, double)>& visit);

struct TypeClass {
  /// Occupation numbers n_a, summing to n.
  std::vector<int> counts;
  double probability = 0.0;
  double w_n = 0.0;
};

struct ExactDistribution {
  double z = 0.0;
  double log_z = 0.0;
  std::vector<TypeClass> classes;
};

/// Exact Z_n and the law of i_n under P_n on a finite space. Requires
/// m^n <= 1e8.
ExactDistribution exact_enumerate(const EnergyModel& model, int n);

}  // namespace gibbs
