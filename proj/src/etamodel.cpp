#include "entdepth/etamodel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "entdepth/csv.hpp"
#include "entdepth/error.hpp"
#include "entdepth/parallel.hpp"

namespace entdepth {

namespace {

constexpr std::size_t kChunkSize = 4096;
constexpr std::size_t kMaxProposalsPerSample = 100'000;

void require_eta(double eta, const char* where) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw InvalidInput(std::string(where) + ": eta must lie in (0, 1], got " + csv::format17(eta));
  }
}

// Uniform on [0, 1) with 53 random bits.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

EtaNodes EtaNodes::from_weighted(std::vector<EtaNode> nodes) {
  if (nodes.empty()) throw InvalidInput("EtaNodes: no nodes");
  for (const auto& node : nodes) {
    require_eta(node.eta, "EtaNodes");
    if (!(node.weight > 0.0) || !std::isfinite(node.weight)) {
      throw InvalidInput("EtaNodes: weights must be positive and finite");
    }
  }
  std::stable_sort(nodes.begin(), nodes.end(),
                   [](const EtaNode& a, const EtaNode& b) { return a.eta < b.eta; });
  std::vector<EtaNode> merged;
  merged.reserve(nodes.size());
  for (const auto& node : nodes) {
    if (!merged.empty() && merged.back().eta == node.eta) {
      merged.back().weight += node.weight;
    } else {
      merged.push_back(node);
    }
  }
  double total = 0.0;
  for (const auto& node : merged) total += node.weight;
  // Already-normalized input (e.g. read back from CSV) is kept bit-exact.
  if (std::abs(total - 1.0) > 1e-13) {
    for (auto& node : merged) node.weight /= total;
  }
  return EtaNodes(std::move(merged));
}

double EtaNodes::moment(int p) const {
  double sum = 0.0;
  for (const auto& node : nodes_) sum += node.weight * std::pow(node.eta, p);
  return sum;
}

std::string EtaNodes::fingerprint() const {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  auto mix = [&hash](double value) {
    auto bits = std::bit_cast<std::uint64_t>(value);
    for (int byte = 0; byte < 8; ++byte) {
      hash ^= (bits >> (8 * byte)) & 0xffu;
      hash *= 0x100000001b3ull;
    }
  };
  for (const auto& node : nodes_) {
    mix(node.eta);
    mix(node.weight);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

double CylinderModel::support_min() const { return std::exp(-1.0 / (nu * nu)); }

double CylinderModel::mean_eta() const { return nu * nu * -std::expm1(-1.0 / (nu * nu)); }

double CylinderModel::second_moment() const {
  return 0.5 * nu * nu * -std::expm1(-2.0 / (nu * nu));
}

double ProbeBeam::rayleigh_range() const {
  return std::numbers::pi * waist * waist / wavelength;
}

double ProbeBeam::spot_size(double z) const {
  const double t = z / rayleigh_range();
  return waist * std::sqrt(1.0 + t * t);
}

double TrapModel::spot_size(double z) const {
  const double t = z * wavelength / (std::numbers::pi * waist * waist);
  return waist * std::sqrt(1.0 + t * t);
}

EtaNodes nodes_from_list(std::span<const double> etas) {
  if (etas.empty()) throw InvalidInput("nodes_from_list: empty eta list");
  std::vector<EtaNode> nodes;
  nodes.reserve(etas.size());
  for (double eta : etas) {
    require_eta(eta, "nodes_from_list");
    nodes.push_back({eta, 1.0});
  }
  return EtaNodes::from_weighted(std::move(nodes));
}

EtaNodes cylinder_nodes(const CylinderModel& model, std::size_t m, CylinderPlacement placement) {
  if (m < 2) throw InvalidInput("cylinder_nodes: need at least two nodes");
  if (!(model.nu > 0.0 && model.nu <= 1.0)) {
    throw InvalidInput("cylinder_nodes: nu must lie in (0, 1]");
  }
  const double nu2 = model.nu * model.nu;
  const double log_lo = -1.0 / nu2;
  std::vector<EtaNode> nodes;
  nodes.reserve(m);

  if (placement == CylinderPlacement::quantile_midpoint) {
    for (std::size_t k = 0; k < m; ++k) {
      const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
      const double eta = std::exp((u - 1.0) / nu2);
      if (!(eta > 0.0)) {
        throw InvalidInput("cylinder_nodes: quantile nodes underflow for nu = " +
                           csv::format17(model.nu) + "; use first-moment placement");
      }
      nodes.push_back({eta, 1.0 / static_cast<double>(m)});
    }
    return EtaNodes::from_weighted(std::move(nodes));
  }

  // Edges uniform in eta between the support minimum and 1. Mass of
  // [a, b] is nu^2 ln(b/a) and its first moment is nu^2 (b - a).
  const double lo = std::exp(log_lo);
  const double width = (1.0 - lo) / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double a = lo + width * static_cast<double>(k);
    const double b = (k + 1 == m) ? 1.0 : lo + width * static_cast<double>(k + 1);
    const double log_ratio = (k == 0) ? std::log(b) - log_lo : std::log1p((b - a) / a);
    const double mass = nu2 * log_ratio;
    const double mean = nu2 * (b - a) / mass;
    nodes.push_back({std::clamp(mean, a, b), mass});
  }
  return EtaNodes::from_weighted(std::move(nodes));
}

double eta_at(double r, double z, const ProbeBeam& probe) {
  if (r < 0.0) throw InvalidInput("eta_at: r must be non-negative");
  const double spot = probe.spot_size(z);
  const double ratio = probe.waist / spot;
  return ratio * ratio * std::exp(-2.0 * r * r / (spot * spot));
}

std::vector<double> sample_fort_etas(const TrapModel& trap, const ProbeBeam& probe,
                                     const SamplingOptions& options) {
  if (!(trap.r_max > 0.0)) throw InvalidInput("fort_nodes: r_max must be positive");
  if (!(trap.temperature > 0.0)) throw InvalidInput("fort_nodes: temperature must be positive");
  if (trap.z_extent < 0.0) throw InvalidInput("fort_nodes: z_extent must be non-negative");
  if (!(trap.depth_over_kb >= 0.0) || !(trap.waist > 0.0) || !(trap.wavelength > 0.0)) {
    throw InvalidInput("fort_nodes: trap depth, waist and wavelength must be positive");
  }
  if (!(probe.waist > 0.0) || !(probe.wavelength > 0.0) || probe.displacement < 0.0) {
    throw InvalidInput("fort_nodes: probe waist and wavelength must be positive, d >= 0");
  }
  if (options.samples < 10'000) throw InvalidInput("fort_nodes: need at least 1e4 samples");

  const double beta = trap.depth_over_kb / trap.temperature;
  const double r_max2 = trap.r_max * trap.r_max;
  const double d = probe.displacement;
  const std::size_t chunks = (options.samples + kChunkSize - 1) / kChunkSize;

  std::vector<double> etas(options.samples);
  std::vector<std::uint64_t> proposals(chunks, 0);

  parallel_for(chunks, options.threads, [&](std::size_t chunk) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                      static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(chunk),
                      static_cast<std::uint32_t>(chunk >> 32)};
    std::mt19937_64 rng(seq);
    const std::size_t begin = chunk * kChunkSize;
    const std::size_t end = std::min(options.samples, begin + kChunkSize);
    std::uint64_t proposed = 0;

    for (std::size_t i = begin; i < end; ++i) {
      const double z = trap.z_extent > 0.0 ? (uniform01(rng) - 0.5) * trap.z_extent : 0.0;
      const double spot = trap.spot_size(z);
      const double spot2 = spot * spot;
      const double peak = beta * (trap.waist * trap.waist) / spot2;
      // Target density in r^2 is proportional to exp(peak * (exp(-x) - 1)),
      // x = 2 r^2 / spot^2. The exponent is convex in x, so it lies below its
      // chord on [0, x_max]; that chord gives a truncated exponential envelope.
      const double x_max = 2.0 * r_max2 / spot2;
      const double rate = peak * -std::expm1(-x_max) / x_max * 2.0 / spot2;
      const double rate_span = rate * r_max2;

      double r2 = 0.0;
      for (std::size_t attempt = 0;; ++attempt) {
        if (attempt == kMaxProposalsPerSample) {
          throw InvalidInput("fort_nodes: rejection sampling stalled; check trap parameters");
        }
        ++proposed;
        const double u = uniform01(rng);
        r2 = rate_span < 1e-12 ? u * r_max2 : -std::log1p(u * std::expm1(-rate_span)) / rate;
        r2 = std::min(r2, r_max2);
        const double log_accept = peak * std::expm1(-2.0 * r2 / spot2) + rate * r2;
        if (std::log(1.0 - uniform01(rng)) <= log_accept) break;
      }
      const double r = std::sqrt(r2);
      const double phi = 2.0 * std::numbers::pi * uniform01(rng);
      const double rho2 = std::max(0.0, r2 + d * d - 2.0 * r * d * std::cos(phi));
      etas[i] = eta_at(std::sqrt(rho2), z, probe);
    }
    proposals[chunk] = proposed;
  });

  std::uint64_t total = 0;
  for (auto p : proposals) total += p;
  const double acceptance = static_cast<double>(options.samples) / static_cast<double>(total);
  if (acceptance < 1e-3) {
    throw InvalidInput("fort_nodes: rejection-sampling acceptance " + csv::format17(acceptance) +
                       " below 1e-3; trap parameters look pathological");
  }
  return etas;
}

EtaNodes quantile_compress(std::vector<double> samples, std::size_t bins) {
  if (samples.empty()) throw InvalidInput("quantile_compress: no samples");
  if (bins == 0) throw InvalidInput("quantile_compress: need at least one bin");
  bins = std::min(bins, samples.size());
  std::sort(samples.begin(), samples.end());
  const std::size_t count = samples.size();
  std::vector<EtaNode> nodes;
  nodes.reserve(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const std::size_t begin = k * count / bins;
    const std::size_t end = (k + 1) * count / bins;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += samples[i];
    const double n = static_cast<double>(end - begin);
    // Summation can drift a hair past the bin's extremes.
    const double mean = std::clamp(sum / n, samples[begin], samples[end - 1]);
    if (!(mean > 0.0)) throw NumericalError("quantile_compress: eta underflowed to zero");
    nodes.push_back({mean, n / static_cast<double>(count)});
  }
  return EtaNodes::from_weighted(std::move(nodes));
}

EtaNodes fort_nodes(const TrapModel& trap, const ProbeBeam& probe,
                    const SamplingOptions& options) {
  if (options.nodes == 0) throw InvalidInput("fort_nodes: node count must be positive");
  return quantile_compress(sample_fort_etas(trap, probe, options), options.nodes);
}

std::string to_csv(const EtaNodes& nodes) {
  std::string out = "eta,weight\n";
  for (const auto& node : nodes.nodes()) {
    out += csv::format17(node.eta);
    out += ',';
    out += csv::format17(node.weight);
    out += '\n';
  }
  return out;
}

EtaNodes nodes_from_csv(std::string_view text) {
  std::vector<EtaNode> nodes;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = csv::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = csv::split_fields(body);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() >= 2 && fields[0] == "eta" && fields[1] == "weight") continue;
    }
    EtaNode node;
    if (fields.size() != 2 || !csv::parse_double(fields[0], node.eta) ||
        !csv::parse_double(fields[1], node.weight)) {
      throw InvalidInput("eta nodes CSV: malformed row at line " + std::to_string(line_no));
    }
    nodes.push_back(node);
  }
  return EtaNodes::from_weighted(std::move(nodes));
}

}  // namespace entdepth
