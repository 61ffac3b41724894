#include "gibbslab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

namespace gibbs {

namespace {

constexpr std::uint64_t kTrappedLimit = 100000;
constexpr int kInitAttempts = 1000;
constexpr std::int64_t kTuneWindow = 100;

}  // namespace

Chain::Chain(const EnergyModel& model, int n, double multiplier, double scale, Rng rng,
             Field field)
    : model_(&model),
      n_(n),
      multiplier_(multiplier),
      scale_(scale),
      rng_(std::move(rng)),
      field_(std::move(field)) {
  require(n >= model.arity(), ErrorCode::InvalidArgument, "need at least k particles");
  require(multiplier > 0.0 && std::isfinite(multiplier), ErrorCode::InvalidArgument,
          "ladder multipliers must be positive and finite");
  const double beta = model.beta().at(n);
  require(std::isfinite(beta) && beta > 0.0, ErrorCode::InvalidArgument,
          "sampling needs finite positive beta_n");
  nbeta_ = n * beta;
  const Space& s = model.space();
  config_.resize(static_cast<std::size_t>(n));
  for (int attempt = 0; attempt < kInitAttempts; ++attempt) {
    for (auto& p : config_) p = s.sample_reference(rng_);
    energy_ = recompute();
    if (std::isfinite(energy_)) return;
  }
  fail(ErrorCode::TrappedChain, "no finite-energy starting configuration found");
}

bool Chain::step() {
  const Space& s = model_->space();
  const std::size_t i = uniform_index(rng_, config_.size());
  const Point x = s.propose(config_[i], scale_, rng_);
  const double u = uniform01(rng_);
  ++proposed_;
  if (!s.contains(x)) return false;
  double dw = model_->delta_move(config_, i, x);
  if (field_ && dw != kInf) {
    const double h = field_(x);
    dw = h == kInf ? kInf : dw + (h - field_(config_[i])) / n_;
  }
  if (dw == kInf) {
    if (++infinite_run_ >= kTrappedLimit)
      fail(ErrorCode::TrappedChain, std::to_string(kTrappedLimit) +
                                        " consecutive proposals had infinite energy");
    return false;
  }
  infinite_run_ = 0;
  double log_ratio = -inverse_temperature() * dw;
  if (s.kind() == SpaceKind::Box)
    log_ratio += s.log_reference_density(x) - s.log_reference_density(config_[i]);
  if (log_ratio >= 0.0 || std::log(u) < log_ratio) {
    config_[i] = x;
    energy_ += dw;
    ++accepted_;
    return true;
  }
  return false;
}

double Chain::recompute() const {
  double e = model_->w_n(config_);
  if (field_ && e != kInf) {
    double h = 0.0;
    for (const auto& p : config_) h += field_(p);
    e = h == kInf ? kInf : e + h / n_;
  }
  return e;
}

void Chain::check_cache() const {
  const double fresh = recompute();
  if (!(std::fabs(fresh - energy_) <= 1e-9 * std::max(1.0, std::fabs(fresh)))) {
    std::ostringstream os;
    os << "cached energy " << energy_ << " differs from recomputed " << fresh;
    fail(ErrorCode::CacheIncoherent, os.str());
  }
}

void Chain::swap_state(Chain& other) {
  std::swap(config_, other.config_);
  std::swap(energy_, other.energy_);
  std::swap(infinite_run_, other.infinite_run_);
}

std::vector<double> geometric_ladder(int size, double t_min) {
  require(size >= 1, ErrorCode::InvalidArgument, "ladder needs at least one level");
  require(t_min > 0.0 && t_min <= 1.0, ErrorCode::InvalidArgument,
          "lowest multiplier must lie in (0, 1]");
  std::vector<double> t(static_cast<std::size_t>(size), 1.0);
  for (int i = 1; i < size; ++i) t[static_cast<std::size_t>(i)] = std::pow(t_min, double(i) / (size - 1));
  return t;
}

SeriesEstimate batch_means(const std::vector<double>& series, int batches) {
  require(batches >= 2, ErrorCode::InvalidArgument, "batch means needs two or more batches");
  require(series.size() >= std::size_t(batches), ErrorCode::InvalidArgument,
          "series shorter than the batch count");
  const std::size_t len = series.size() / std::size_t(batches);
  SeriesEstimate out;
  std::vector<double> means(std::size_t(batches), 0.0);
  for (std::size_t b = 0; b < means.size(); ++b) {
    for (std::size_t i = 0; i < len; ++i) means[b] += series[b * len + i];
    means[b] /= double(len);
    out.mean += means[b] / batches;
  }
  double var = 0.0;
  for (double m : means) var += (m - out.mean) * (m - out.mean);
  var /= double(batches - 1);
  out.standard_error = std::sqrt(var / batches);
  return out;
}

double integrated_autocorrelation(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 4) return 1.0;
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  auto cov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (series[i] - mean) * (series[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double c0 = cov(0);
  if (!(c0 > 0.0)) return 1.0;
  double tau = 1.0;
  for (std::size_t m = 1; m < n / 2; ++m) {
    tau += 2.0 * cov(m) / c0;
    if (static_cast<double>(m) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0 / static_cast<double>(n));
}

namespace {

struct Replica {
  Chain chain;
  std::int64_t window_proposed = 0, window_accepted = 0;
  std::int64_t post_proposed = 0, post_accepted = 0;
  std::int64_t checks = 0;
};

}  // namespace

ChainReport mcmc_run(const EnergyModel& model, int n, const SamplerOptions& options) {
  require(options.steps > 0, ErrorCode::InvalidArgument, "steps must be positive");
  require(options.burn_in_fraction >= 0.0 && options.burn_in_fraction < 1.0,
          ErrorCode::InvalidArgument, "burn-in fraction must lie in [0, 1)");
  require(options.multiplier > 0.0 && std::isfinite(options.multiplier),
          ErrorCode::InvalidArgument, "base multiplier must be positive and finite");
  require(options.proposal_scale > 0.0, ErrorCode::InvalidArgument,
          "proposal scale must be positive");
  require(options.thin >= 0 && options.swap_interval > 0 && options.check_interval > 0,
          ErrorCode::InvalidArgument, "thin, swap and check intervals must be positive");
  std::vector<double> ladder = options.ladder.empty() ? std::vector<double>{1.0} : options.ladder;
  require(ladder.front() == 1.0, ErrorCode::InvalidArgument,
          "the first ladder multiplier must be 1");
  for (double t : ladder)
    require(t > 0.0 && t <= 1.0, ErrorCode::InvalidArgument,
            "ladder multipliers must lie in (0, 1]");

  ChainReport report;
  report.n = n;
  report.seed = options.seed;
  report.steps = options.steps;
  report.burn_in = static_cast<std::int64_t>(options.burn_in_fraction * double(options.steps));
  report.thin = options.thin > 0 ? options.thin : (options.steps + 1999) / 2000;

  const bool tune = options.autotune && !model.space().independence_proposals();
  const double max_scale = model.space().diameter();
  std::vector<Replica> reps;
  for (std::size_t r = 0; r < ladder.size(); ++r)
    reps.push_back(Replica{Chain(model, n, options.multiplier * ladder[r], options.proposal_scale,
                                 make_stream(options.seed, "chain", r), options.field)});
  Rng swap_rng = make_stream(options.seed, "swap");
  std::vector<std::int64_t> swap_tries(ladder.size() > 1 ? ladder.size() - 1 : 0, 0);
  std::vector<std::int64_t> swap_hits(swap_tries.size(), 0);

  auto advance = [&](std::size_t r, std::int64_t from, std::int64_t to) {
    Replica& rep = reps[r];
    for (std::int64_t s = from; s < to; ++s) {
      const bool hit = rep.chain.step();
      if (s < report.burn_in) {
        ++rep.window_proposed;
        rep.window_accepted += hit;
        if (tune && rep.window_proposed == kTuneWindow) {
          const double rate = double(rep.window_accepted) / double(kTuneWindow);
          double sc = rep.chain.scale();
          if (rate < 0.3) sc *= 0.7;
          else if (rate > 0.5) sc *= 1.4;
          rep.chain.set_scale(std::clamp(sc, 1e-8, max_scale));
          rep.window_proposed = rep.window_accepted = 0;
        }
      } else {
        ++rep.post_proposed;
        rep.post_accepted += hit;
        if (r == 0 && (s - report.burn_in) % report.thin == 0) {
          report.samples.push_back(rep.chain.config());
          report.energies.push_back(rep.chain.energy());
        }
      }
      if ((s + 1) % options.check_interval == 0) {
        rep.chain.check_cache();
        ++rep.checks;
      }
    }
  };

  const std::int64_t block = ladder.size() > 1 ? options.swap_interval : options.steps;
  std::int64_t round = 0;
  for (std::int64_t from = 0; from < options.steps; from += block, ++round) {
    const std::int64_t to = std::min(options.steps, from + block);
    if (reps.size() == 1) {
      advance(0, from, to);
    } else {
      std::vector<std::future<void>> jobs;
      for (std::size_t r = 0; r < reps.size(); ++r)
        jobs.push_back(std::async(std::launch::async, advance, r, from, to));
      for (auto& j : jobs) j.get();
      // Alternate even and odd neighbour pairs so every edge gets tried.
      for (std::size_t a = static_cast<std::size_t>(round % 2); a + 1 < reps.size(); a += 2) {
        Chain& x = reps[a].chain;
        Chain& y = reps[a + 1].chain;
        const double log_alpha = (x.inverse_temperature() - y.inverse_temperature()) *
                                 (x.energy() - y.energy());
        ++swap_tries[a];
        if (log_alpha >= 0.0 || std::log(uniform01(swap_rng)) < log_alpha) {
          x.swap_state(y);
          ++swap_hits[a];
        }
      }
    }
  }

  const Replica& target = reps.front();
  report.acceptance_rate =
      target.post_proposed > 0 ? double(target.post_accepted) / double(target.post_proposed) : 0.0;
  report.proposal_scale = target.chain.scale();
  for (const auto& rep : reps) report.cache_checks += rep.checks;
  report.autocorrelation_time = integrated_autocorrelation(report.energies);
  report.effective_sample_size = double(report.energies.size()) / report.autocorrelation_time;
  for (std::size_t a = 0; a < swap_tries.size(); ++a) {
    const double rate = swap_tries[a] > 0 ? double(swap_hits[a]) / double(swap_tries[a]) : 0.0;
    report.swap_acceptance.push_back(rate);
    if (rate < 0.1 || rate > 0.9) {
      std::ostringstream os;
      os << "swap acceptance between levels " << a << " and " << a + 1 << " is " << rate
         << ", outside [0.1, 0.9]";
      report.warnings.push_back(os.str());
    }
  }
  return report;
}

void for_each_type_class(
    const Space& s, int n,
    const std::function<void(const std::vector<int>&, const std::vector<Point>&, double)>& visit) {
  require(s.kind() == SpaceKind::Finite, ErrorCode::UnsupportedKind,
          "type classes need a finite space");
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one particle");
  const std::size_t m = s.size();
  std::vector<int> counts(m, 0);
  std::vector<Point> config(static_cast<std::size_t>(n));
  const double log_nfact = std::lgamma(n + 1.0);
  // Compositions of n into m ordered parts.
  auto rec = [&](auto&& self, std::size_t atom, int left) -> void {
    if (atom + 1 == m) {
      counts[atom] = left;
      std::size_t pos = 0;
      double lw = log_nfact;
      for (std::size_t a = 0; a < m; ++a) {
        for (int c = 0; c < counts[a]; ++c) config[pos++] = s.node(a);
        lw += counts[a] * std::log(s.weight(a)) - std::lgamma(counts[a] + 1.0);
      }
      visit(counts, config, lw);
      return;
    }
    for (int c = left; c >= 0; --c) {
      counts[atom] = c;
      self(self, atom + 1, left - c);
    }
  };
  rec(rec, 0, n);
}

ExactDistribution exact_enumerate(const EnergyModel& model, int n) {
  const Space& s = model.space();
  require(s.kind() == SpaceKind::Finite, ErrorCode::UnsupportedKind,
          "exact enumeration needs a finite space");
  require(n >= model.arity(), ErrorCode::InvalidArgument, "need at least k particles");
  if (std::pow(double(s.size()), double(n)) > 1e8)
    fail(ErrorCode::CapExceeded, "m^n exceeds the enumeration cap of 1e8");
  const double beta = model.beta().at(n);
  require(std::isfinite(beta) && beta > 0.0, ErrorCode::InvalidArgument,
          "enumeration needs finite positive beta_n");

  ExactDistribution out;
  std::vector<double> log_weight;
  for_each_type_class(s, n, [&](const std::vector<int>& counts, const std::vector<Point>& config,
                                double lw) {
    const double w = model.w_n(config);
    out.classes.push_back(TypeClass{counts, 0.0, w});
    log_weight.push_back(w == kInf ? -kInf : lw - n * beta * w);
  });

  const double top = *std::max_element(log_weight.begin(), log_weight.end());
  require(top > -kInf, ErrorCode::InvalidArgument, "Z_n = 0: every configuration has W_n = +inf");
  double sum = 0.0;
  for (double lw : log_weight) sum += std::exp(lw - top);
  out.log_z = top + std::log(sum);
  out.z = std::exp(out.log_z);
  for (std::size_t c = 0; c < out.classes.size(); ++c)
    out.classes[c].probability = std::exp(log_weight[c] - out.log_z);
  return out;
}

}  // namespace gibbs
