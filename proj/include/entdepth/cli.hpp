#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "entdepth/bounds.hpp"
#include "entdepth/bruteforce.hpp"
#include "entdepth/cert.hpp"
#include "entdepth/criteria.hpp"
#include "entdepth/etamodel.hpp"

namespace entdepth::cli {

inline constexpr const char* kConfigSchema = "entdepth-config/1";
inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int {
  kOk = 0,
  kInvalidInput = 1,
  kConsistencyFailure = 2,
  kNumericalFailure = 3,
};

struct ListSource {
  std::vector<double> etas;
};
struct CylinderSource {
  double nu = 0.3;
  CylinderPlacement placement = CylinderPlacement::first_moment;
};
struct FortSource {
  TrapModel trap;
  ProbeBeam probe;
  std::size_t samples = 1'000'000;
};
struct NodesFileSource {
  std::string path;
};

using EtaSource = std::variant<ListSource, CylinderSource, FortSource, NodesFileSource>;

struct DepthSpec {
  int n = 1;
  BoundKind kind = BoundKind::separable;
};

struct RunConfig {
  EtaSource eta_source = CylinderSource{};
  std::vector<DepthSpec> depths;
  std::size_t mu_points = 400;
  std::size_t nodes = 512;
  std::string out_dir = "entdepth-out";
  std::uint64_t seed = 1;
  int threads = 1;
  bool symmetric_reference = false;
  bool raw = false;
  // Every value that was filled in because the document omitted it.
  nlohmann::json applied_defaults = nlohmann::json::object();
};

// Command-line values that take precedence over the config document.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::size_t> mu_points;
  std::optional<std::size_t> nodes;
  std::optional<std::string> out_dir;
};

RunConfig parse_config(const nlohmann::json& doc, const Overrides& overrides = {});
RunConfig load_config(const std::string& path, const Overrides& overrides = {});

DepthSpec default_depth_spec(int n);

EtaNodes build_nodes(const RunConfig& config);

struct CurvesOutput {
  EtaNodes nodes;
  std::vector<CriterionCurve> curves;
  std::vector<CriterionCurve> symmetric_curves;
  std::vector<std::string> files;
  nlohmann::json manifest;
};

// Builds the curves; writes files only when write_files is set.
CurvesOutput cmd_curves(const RunConfig& config, bool write_files = true);

struct CertifyOptions {
  std::optional<RunConfig> config;        // generate curves on the fly
  std::vector<std::string> curve_files;   // or read previously written curves
  std::string data_path;
  std::optional<std::string> out_path;    // stdout when absent
  double k_sigma = 1.0;
};

std::string cmd_certify(const CertifyOptions& options);

struct VerifyOptions {
  int n = 2;
  int trials = 100;
  std::uint64_t seed = 1;
  int restarts = 0;
  int threads = 1;
  bool allow_large = false;
  std::optional<std::string> out_path;
};

struct VerifyOutput {
  EqualEtaReport equal_eta;
  GradientCheckSummary gradient;
  std::string text;
  bool passed = false;
};

VerifyOutput cmd_verify(const VerifyOptions& options);

XiResult cmd_xi(const std::string& etas_csv, const std::string& jz_csv);

std::vector<double> read_column(const std::string& path);

// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace entdepth::cli
