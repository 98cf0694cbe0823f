#include "entdepth/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include <Eigen/Core>

#include "CLI11.hpp"

#include "entdepth/csv.hpp"
#include "entdepth/error.hpp"

namespace entdepth::cli {

using nlohmann::json;

namespace {

// Reads doc[key] or records `fallback` as an applied default under `path`.
template <typename T>
T take(const json& doc, const char* key, T fallback, json& defaults, const std::string& path) {
  if (doc.contains(key)) {
    try {
      return doc.at(key).get<T>();
    } catch (const json::exception&) {
      throw InvalidInput("config: field '" + path + "' has the wrong type");
    }
  }
  defaults[path] = fallback;
  return fallback;
}

CylinderPlacement placement_from_string(const std::string& name) {
  if (name == "first_moment") return CylinderPlacement::first_moment;
  if (name == "quantile_midpoint") return CylinderPlacement::quantile_midpoint;
  throw InvalidInput("config: unknown cylinder placement '" + name + "'");
}

std::string placement_name(CylinderPlacement p) {
  return p == CylinderPlacement::first_moment ? "first_moment" : "quantile_midpoint";
}

EtaSource parse_source(const json& src, json& defaults) {
  if (!src.is_object() || !src.contains("type")) {
    throw InvalidInput("config: eta_source must be an object with a 'type'");
  }
  const auto type = src.at("type").get<std::string>();
  if (type == "list") {
    ListSource list;
    if (!src.contains("etas") || !src.at("etas").is_array()) {
      throw InvalidInput("config: list source needs an 'etas' array");
    }
    list.etas = src.at("etas").get<std::vector<double>>();
    return list;
  }
  if (type == "cylinder") {
    CylinderSource cyl;
    if (!src.contains("nu")) throw InvalidInput("config: cylinder source needs 'nu'");
    cyl.nu = src.at("nu").get<double>();
    cyl.placement = placement_from_string(
        take<std::string>(src, "placement", "first_moment", defaults, "eta_source.placement"));
    return cyl;
  }
  if (type == "fort") {
    FortSource fort;
    const json trap = src.value("trap", json::object());
    const json probe = src.value("probe", json::object());
    const TrapModel t0;
    const ProbeBeam p0;
    fort.trap.depth_over_kb = take(trap, "depth_over_kb", t0.depth_over_kb, defaults, "eta_source.trap.depth_over_kb");
    fort.trap.temperature = take(trap, "temperature", t0.temperature, defaults, "eta_source.trap.temperature");
    fort.trap.waist = take(trap, "waist", t0.waist, defaults, "eta_source.trap.waist");
    fort.trap.wavelength = take(trap, "wavelength", t0.wavelength, defaults, "eta_source.trap.wavelength");
    fort.trap.r_max = take(trap, "r_max", 2.0 * fort.trap.waist, defaults, "eta_source.trap.r_max");
    fort.trap.z_extent = take(trap, "z_extent", t0.z_extent, defaults, "eta_source.trap.z_extent");
    fort.probe.waist = take(probe, "waist", p0.waist, defaults, "eta_source.probe.waist");
    fort.probe.wavelength = take(probe, "wavelength", p0.wavelength, defaults, "eta_source.probe.wavelength");
    fort.probe.displacement =
        take(probe, "displacement", p0.displacement, defaults, "eta_source.probe.displacement");
    fort.samples = take<std::size_t>(src, "samples", 1'000'000, defaults, "eta_source.samples");
    return fort;
  }
  if (type == "csv") {
    if (!src.contains("path")) throw InvalidInput("config: csv source needs 'path'");
    return NodesFileSource{src.at("path").get<std::string>()};
  }
  throw InvalidInput("config: unknown eta_source type '" + type + "'");
}

json source_to_json(const EtaSource& source) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ListSource>) {
          return {{"type", "list"}, {"etas", s.etas}};
        } else if constexpr (std::is_same_v<T, CylinderSource>) {
          return {{"type", "cylinder"}, {"nu", s.nu}, {"placement", placement_name(s.placement)}};
        } else if constexpr (std::is_same_v<T, FortSource>) {
          return {{"type", "fort"},
                  {"samples", s.samples},
                  {"trap",
                   {{"depth_over_kb", s.trap.depth_over_kb},
                    {"temperature", s.trap.temperature},
                    {"waist", s.trap.waist},
                    {"wavelength", s.trap.wavelength},
                    {"r_max", s.trap.r_max},
                    {"z_extent", s.trap.z_extent}}},
                  {"probe",
                   {{"waist", s.probe.waist},
                    {"wavelength", s.probe.wavelength},
                    {"displacement", s.probe.displacement}}}};
        } else {
          return {{"type", "csv"}, {"path", s.path}};
        }
      },
      source);
}

std::string curve_file_name(int depth, bool symmetric) {
  return "curve_depth" + std::to_string(depth) + (symmetric ? "_symmetric" : "") + ".csv";
}

std::string read_input(const std::string& path) { return csv::read_file(path); }

}  // namespace

DepthSpec default_depth_spec(int n) {
  if (n < 1) throw InvalidInput("config: depth must be >= 1");
  if (n == 1) return {1, BoundKind::separable};
  if (n == 2) return {2, BoundKind::pair};
  return {n, n % 2 == 0 ? BoundKind::numerical_even : BoundKind::analytic};
}

RunConfig parse_config(const json& doc, const Overrides& overrides) {
  if (!doc.is_object()) throw InvalidInput("config: top level must be a JSON object");
  if (!doc.contains("schema") || doc.at("schema") != kConfigSchema) {
    throw InvalidInput(std::string("config: 'schema' must be \"") + kConfigSchema + "\"");
  }
  RunConfig config;
  json& defaults = config.applied_defaults;
  try {
    if (!doc.contains("eta_source")) throw InvalidInput("config: missing 'eta_source'");
    config.eta_source = parse_source(doc.at("eta_source"), defaults);

    if (doc.contains("depths")) {
      if (!doc.at("depths").is_array() || doc.at("depths").empty()) {
        throw InvalidInput("config: 'depths' must be a non-empty array");
      }
      for (const auto& entry : doc.at("depths")) {
        if (entry.is_number_integer()) {
          config.depths.push_back(default_depth_spec(entry.get<int>()));
        } else if (entry.is_object() && entry.contains("n")) {
          DepthSpec spec = default_depth_spec(entry.at("n").get<int>());
          if (entry.contains("bound")) spec.kind = bound_kind_from_string(entry.at("bound").get<std::string>());
          config.depths.push_back(spec);
        } else {
          throw InvalidInput("config: depth entries must be integers or {\"n\":..,\"bound\":..}");
        }
      }
    } else {
      config.depths = {default_depth_spec(1), default_depth_spec(2)};
      defaults["depths"] = json::array({1, 2});
    }

    config.mu_points = take<std::size_t>(doc, "mu_points", 400, defaults, "mu_points");
    config.nodes = take<std::size_t>(doc, "nodes", 512, defaults, "nodes");
    config.out_dir = take<std::string>(doc, "out", "entdepth-out", defaults, "out");
    config.seed = take<std::uint64_t>(doc, "seed", 1, defaults, "seed");
    config.threads = take<int>(doc, "threads", 1, defaults, "threads");
    config.symmetric_reference = take<bool>(doc, "symmetric_reference", false, defaults, "symmetric_reference");
    config.raw = take<bool>(doc, "raw", false, defaults, "raw");
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }

  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.threads) config.threads = *overrides.threads;
  if (overrides.mu_points) config.mu_points = *overrides.mu_points;
  if (overrides.nodes) config.nodes = *overrides.nodes;
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;

  if (config.depths.front().n != 1) throw InvalidInput("config: depths must start at 1");
  for (std::size_t i = 1; i < config.depths.size(); ++i) {
    if (config.depths[i].n <= config.depths[i - 1].n) {
      throw InvalidInput("config: depths must be strictly ascending");
    }
  }
  for (const auto& d : config.depths) {
    const bool ok = (d.kind == BoundKind::separable && d.n == 1) ||
                    (d.kind == BoundKind::pair && d.n == 2) ||
                    (d.kind == BoundKind::analytic && d.n >= 2) ||
                    (d.kind == BoundKind::numerical_even && d.n >= 2 && d.n % 2 == 0);
    if (!ok) {
      throw InvalidInput("config: bound '" + to_string(d.kind) + "' cannot be used for depth " +
                         std::to_string(d.n));
    }
  }
  if (config.mu_points < 200) throw InvalidInput("config: mu_points must be >= 200");
  if (config.nodes < 2) throw InvalidInput("config: nodes must be >= 2");
  if (config.threads < 1) throw InvalidInput("config: threads must be >= 1");
  if (config.out_dir.empty()) throw InvalidInput("config: output directory must not be empty");
  return config;
}

RunConfig load_config(const std::string& path, const Overrides& overrides) {
  json doc;
  try {
    doc = json::parse(read_input(path));
  } catch (const json::parse_error& e) {
    throw InvalidInput("config '" + path + "': " + e.what());
  }
  return parse_config(doc, overrides);
}

EtaNodes build_nodes(const RunConfig& config) {
  return std::visit(
      [&](const auto& s) -> EtaNodes {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ListSource>) {
          return nodes_from_list(s.etas);
        } else if constexpr (std::is_same_v<T, CylinderSource>) {
          return cylinder_nodes(CylinderModel{s.nu}, config.nodes, s.placement);
        } else if constexpr (std::is_same_v<T, FortSource>) {
          SamplingOptions options;
          options.samples = s.samples;
          options.seed = config.seed;
          options.nodes = config.nodes;
          options.threads = config.threads;
          return fort_nodes(s.trap, s.probe, options);
        } else {
          return nodes_from_csv(read_input(s.path));
        }
      },
      config.eta_source);
}

CurvesOutput cmd_curves(const RunConfig& config, bool write_files) {
  CurvesOutput out{build_nodes(config), {}, {}, {}, {}};
  const auto mu_grid = default_curve_mu_grid(out.nodes, config.mu_points);
  const auto symmetric_nodes = nodes_from_list(std::vector<double>{1.0});
  const auto symmetric_grid = default_curve_mu_grid(symmetric_nodes, config.mu_points);

  json depth_meta = json::array();
  for (const auto& spec : config.depths) {
    BlockBound bound = [&] {
      switch (spec.kind) {
        case BoundKind::separable: return BlockBound::separable();
        case BoundKind::pair: return BlockBound::pair();
        case BoundKind::analytic: return BlockBound::analytic(spec.n);
        case BoundKind::numerical_even: return BlockBound::numerical_even(spec.n, default_bound_mu_grid());
      }
      throw InvalidInput("unknown bound kind");
    }();
    out.curves.push_back(criterion_curve(out.nodes, bound, mu_grid, config.threads));
    if (config.symmetric_reference) {
      out.symmetric_curves.push_back(criterion_curve(symmetric_nodes, bound, symmetric_grid, config.threads));
    }
    json meta = {{"n", spec.n}, {"bound", to_string(spec.kind)}, {"file", curve_file_name(spec.n, false)}};
    if (spec.kind == BoundKind::analytic && spec.n % 2 == 1 && spec.n > 2) {
      meta["note"] = "odd depth: closed-form bound (not tight); tight bound exists only for even n";
    }
    if (spec.kind == BoundKind::numerical_even) {
      meta["bound_table_mu_grid"] = "log:400:0.001:1000";
      meta["bound_evaluation"] = "ground states of J_x^2 - mu' J_z solved per query";
    }
    depth_meta.push_back(meta);
  }

  json& manifest = out.manifest;
  manifest["schema"] = "entdepth-manifest/1";
  manifest["tool_version"] = kToolVersion;
  manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                              "." + std::to_string(EIGEN_MINOR_VERSION);
  manifest["units"] = {{"length", "m"}, {"temperature", "K"}, {"curves", "CSS-normalized"}};
  manifest["config"] = {{"schema", kConfigSchema},
                        {"eta_source", source_to_json(config.eta_source)},
                        {"mu_points", config.mu_points},
                        {"nodes", config.nodes},
                        {"seed", config.seed},
                        {"threads", config.threads},
                        {"symmetric_reference", config.symmetric_reference},
                        {"raw", config.raw},
                        {"out", config.out_dir}};
  json depths_config = json::array();
  for (const auto& d : config.depths) depths_config.push_back({{"n", d.n}, {"bound", to_string(d.kind)}});
  manifest["config"]["depths"] = depths_config;
  manifest["applied_defaults"] = config.applied_defaults;
  manifest["eta_fingerprint"] = out.nodes.fingerprint();
  manifest["eta_node_count"] = out.nodes.size();
  manifest["curve_mu_grid"] = out.curves.front().mu_grid_description;
  manifest["depths"] = depth_meta;
  if (config.symmetric_reference) manifest["symmetric_fingerprint"] = symmetric_nodes.fingerprint();

  if (write_files) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    auto emit = [&](const std::string& name, const std::string& contents) {
      const auto path = (fs::path(config.out_dir) / name).string();
      csv::write_file(path, contents);
      out.files.push_back(path);
    };
    emit("eta_nodes.csv", to_csv(out.nodes));
    for (const auto& curve : out.curves) {
      emit(curve_file_name(curve.depth, false), to_csv(curve, config.raw, &out.nodes));
    }
    for (const auto& curve : out.symmetric_curves) {
      emit(curve_file_name(curve.depth, true), to_csv(curve, config.raw, &symmetric_nodes));
    }
    json files = json::array();
    for (const auto& f : out.files) files.push_back(fs::path(f).filename().string());
    manifest["files"] = files;
    emit("manifest.json", manifest.dump(2) + "\n");
  }
  return out;
}

std::string cmd_certify(const CertifyOptions& options) {
  if (options.data_path.empty()) throw InvalidInput("certify: --data is required");
  if (options.config && !options.curve_files.empty()) {
    throw InvalidInput("certify: use either --config or --curves, not both");
  }
  std::vector<CriterionCurve> curves;
  if (options.config) {
    curves = cmd_curves(*options.config, false).curves;
  } else if (!options.curve_files.empty()) {
    for (const auto& path : options.curve_files) {
      if (path == options.data_path || (options.out_path && path == *options.out_path)) {
        throw InvalidInput("certify: file paths must be distinct");
      }
      curves.push_back(curve_from_csv(read_input(path)));
    }
    std::stable_sort(curves.begin(), curves.end(),
                     [](const CriterionCurve& a, const CriterionCurve& b) { return a.depth < b.depth; });
  } else {
    throw InvalidInput("certify: need --config or --curves");
  }
  if (options.out_path && *options.out_path == options.data_path) {
    throw InvalidInput("certify: output path equals the data path");
  }

  const auto points = data_points_from_csv(read_input(options.data_path));
  // Checked up front so an empty data file still reports mismatched curves.
  check_curve_family(curves);

  std::vector<DepthVerdict> verdicts;
  verdicts.reserve(points.size());
  for (const auto& p : points) verdicts.push_back(certify(p, curves, options.k_sigma));
  auto text = verdicts_csv(points, verdicts);
  if (options.out_path) csv::write_file(*options.out_path, text);
  return text;
}

VerifyOutput cmd_verify(const VerifyOptions& options) {
  if (options.n < 1) throw InvalidInput("verify: n must be >= 1");
  if (options.n > 6 && !options.allow_large) throw InvalidInput("verify: n > 6 needs --allow-large");
  if (options.trials < 1) throw InvalidInput("verify: trials must be >= 1");

  VerifyOutput out;
  out.equal_eta = verify_equal_eta(options.n, options.trials, options.seed, options.restarts, options.threads);
  out.gradient = gradient_check(options.n, 100, options.seed);
  std::ostringstream text;
  text << to_text(out.equal_eta);
  text << "gradient check: n=" << out.gradient.n << " points=" << out.gradient.points
       << " max_relative_error=" << csv::format17(out.gradient.max_relative_error) << ' '
       << (out.gradient.passed ? "PASS" : "FAIL") << '\n';
  out.passed = out.equal_eta.passed && out.gradient.passed;
  text << "OVERALL " << (out.passed ? "PASS" : "FAIL") << '\n';
  out.text = text.str();
  if (options.out_path) csv::write_file(*options.out_path, out.text);
  return out;
}

std::vector<double> read_column(const std::string& path) {
  std::vector<double> values;
  std::istringstream in(read_input(path));
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = csv::trim(line);
    if (body.empty() || body.front() == '#') continue;
    double value = 0.0;
    if (!csv::parse_double(body, value)) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw InvalidInput(path + ": malformed value at line " + std::to_string(line_no));
    }
    first = false;
    values.push_back(value);
  }
  return values;
}

XiResult cmd_xi(const std::string& etas_csv, const std::string& jz_csv) {
  const auto etas = read_column(etas_csv);
  const auto jz = read_column(jz_csv);
  return xi2_asym(etas, jz);
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Entanglement-depth criteria for asymmetrically probed spin ensembles"};
  app.require_subcommand(1);

  Overrides overrides;
  std::uint64_t seed = 1;
  int threads = 1;
  std::size_t mu_points = 400;
  std::size_t nodes = 512;
  std::string out_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "RNG seed");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--mu-points", mu_points, "Lagrange-multiplier grid size");
    sub->add_option("--nodes", nodes, "eta node count");
    sub->add_option("--out", out_dir, "output directory or file");
  };

  std::string config_path;
  auto* curves = app.add_subcommand("curves", "write criterion curves for every configured depth");
  curves->add_option("--config", config_path, "JSON run configuration")->required();
  add_common(curves);

  std::string certify_config;
  std::vector<std::string> curve_files;
  std::string data_path;
  double k_sigma = 1.0;
  auto* certify_cmd = app.add_subcommand("certify", "classify measured points by entanglement depth");
  certify_cmd->add_option("--config", certify_config, "generate curves from this configuration");
  certify_cmd->add_option("--curves", curve_files, "previously written curve CSV files");
  certify_cmd->add_option("--data", data_path, "points CSV: s_norm,v_norm[,sigma_v][,label]")->required();
  certify_cmd->add_option("--k-sigma", k_sigma, "uncertainty inflation factor")->check(CLI::NonNegativeNumber);
  add_common(certify_cmd);

  int verify_n = 2;
  int trials = 100;
  int restarts = 0;
  bool allow_large = false;
  auto* verify_cmd = app.add_subcommand("verify", "brute-force check that equal couplings minimize the noise");
  verify_cmd->add_option("--n", verify_n, "block size")->required();
  verify_cmd->add_option("--trials", trials, "random coupling tuples");
  verify_cmd->add_option("--restarts", restarts, "optimizer restarts (0 = default)");
  verify_cmd->add_flag("--allow-large", allow_large, "permit n = 7, 8");
  add_common(verify_cmd);

  std::string etas_csv;
  std::string jz_csv;
  auto* xi_cmd = app.add_subcommand("xi", "asymmetric squeezing parameter of a product state");
  xi_cmd->add_option("--etas", etas_csv, "one coupling per line")->required();
  xi_cmd->add_option("--jz", jz_csv, "one <j_z> per line")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidInput;
  }

  auto collect = [&](CLI::App* sub) {
    if (sub->count("--seed")) overrides.seed = seed;
    if (sub->count("--threads")) overrides.threads = threads;
    if (sub->count("--mu-points")) overrides.mu_points = mu_points;
    if (sub->count("--nodes")) overrides.nodes = nodes;
    if (sub->count("--out")) overrides.out_dir = out_dir;
  };

  try {
    if (curves->parsed()) {
      collect(curves);
      const auto config = load_config(config_path, overrides);
      const auto result = cmd_curves(config);
      for (const auto& f : result.files) std::cout << f << '\n';
    } else if (certify_cmd->parsed()) {
      CertifyOptions options;
      std::optional<std::string> out_file;
      if (certify_cmd->count("--out")) out_file = out_dir;
      Overrides config_overrides;
      if (certify_cmd->count("--seed")) config_overrides.seed = seed;
      if (certify_cmd->count("--threads")) config_overrides.threads = threads;
      if (certify_cmd->count("--mu-points")) config_overrides.mu_points = mu_points;
      if (certify_cmd->count("--nodes")) config_overrides.nodes = nodes;
      if (!certify_config.empty()) options.config = load_config(certify_config, config_overrides);
      options.curve_files = curve_files;
      options.data_path = data_path;
      options.out_path = out_file;
      options.k_sigma = k_sigma;
      const auto text = cmd_certify(options);
      if (!out_file) std::cout << text;
    } else if (verify_cmd->parsed()) {
      VerifyOptions options;
      options.n = verify_n;
      options.trials = trials;
      options.seed = seed;
      options.restarts = restarts;
      options.threads = threads;
      options.allow_large = allow_large;
      if (verify_cmd->count("--out")) options.out_path = out_dir;
      const auto result = cmd_verify(options);
      if (!options.out_path) std::cout << result.text;
      return result.passed ? kOk : kConsistencyFailure;
    } else if (xi_cmd->parsed()) {
      const auto result = cmd_xi(etas_csv, jz_csv);
      std::cout << csv::format17(result.xi2) << '\n';
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const ConsistencyError& e) {
    std::cerr << "consistency failure: " << e.what() << '\n';
    return kConsistencyFailure;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "internal failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kOk;
}

}  // namespace entdepth::cli
