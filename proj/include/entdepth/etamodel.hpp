#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace entdepth {

struct EtaNode {
  double eta = 0.0;
  double weight = 0.0;
};

// Discrete weighted representation of the coupling distribution p(eta).
// Etas are strictly increasing in (0, 1] and the weights sum to one.
class EtaNodes {
 public:
  // Sorts, merges identical etas and renormalizes the weights.
  static EtaNodes from_weighted(std::vector<EtaNode> nodes);

  std::span<const EtaNode> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double max_eta() const { return nodes_.back().eta; }
  double min_eta() const { return nodes_.front().eta; }

  // Weighted moment sum_k w_k eta_k^p.
  double moment(int p) const;

  // 16 hex digits of FNV-1a over the node bit patterns.
  std::string fingerprint() const;

 private:
  explicit EtaNodes(std::vector<EtaNode> nodes) : nodes_(std::move(nodes)) {}
  std::vector<EtaNode> nodes_;
};

// Uniform atoms in a cylinder of radius R probed by exp(-x^2/sigma^2):
// p(eta) = nu^2/eta on [exp(-1/nu^2), 1], nu = sigma/R.
struct CylinderModel {
  double nu = 0.3;

  double support_min() const;
  double mean_eta() const;
  double second_moment() const;
};

enum class CylinderPlacement {
  // Bins of equal width in eta (equal share of the first moment, since
  // eta p(eta) is flat); node at the bin's conditional mean, weight = bin mass.
  first_moment,
  // Equal-probability bins; node at the midpoint quantile (k + 1/2)/m,
  // weight 1/m. Underflows for small nu.
  quantile_midpoint,
};

// Gaussian probe beam. All lengths in meters.
struct ProbeBeam {
  double waist = 27e-6;
  double wavelength = 852e-9;
  double displacement = 0.0;

  double rayleigh_range() const;
  double spot_size(double z) const;
};

// Gaussian far-off-resonant dipole trap with a thermal radial distribution.
// The depth is stored as a positive temperature V0/k_B; atoms concentrate
// where the trap intensity is highest.
struct TrapModel {
  double depth_over_kb = 1.73e-4;  // K
  double temperature = 50e-6;      // K
  double waist = 50e-6;            // m
  double wavelength = 1032e-9;     // m
  double r_max = 100e-6;           // m, radial sampling cutoff
  double z_extent = 0.0;           // m, atoms uniform on [-L/2, L/2]; 0 = focal plane

  double spot_size(double z) const;
};

struct SamplingOptions {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 1;
  std::size_t nodes = 512;
  int threads = 1;
};

EtaNodes nodes_from_list(std::span<const double> etas);

EtaNodes cylinder_nodes(const CylinderModel& model, std::size_t m,
                        CylinderPlacement placement = CylinderPlacement::first_moment);

// Normalized probe intensity at distance r from the probe axis and axial position z.
double eta_at(double r, double z, const ProbeBeam& probe);

// Raw Monte Carlo eta samples in sample-index order.
std::vector<double> sample_fort_etas(const TrapModel& trap, const ProbeBeam& probe,
                                     const SamplingOptions& options);

// Compresses samples into `bins` equal-count quantile bins; node = bin mean,
// weight = bin mass.
EtaNodes quantile_compress(std::vector<double> samples, std::size_t bins);

EtaNodes fort_nodes(const TrapModel& trap, const ProbeBeam& probe,
                    const SamplingOptions& options);

std::string to_csv(const EtaNodes& nodes);
EtaNodes nodes_from_csv(std::string_view text);

}  // namespace entdepth
