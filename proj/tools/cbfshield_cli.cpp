// Command-line front end. Uses only the C interface.

#include "cbfshield/cbfshield.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitViolation = 3;

struct Failure {
  int exit_code;
};

int exit_code_for(cbfs_status status) {
  switch (status) {
    case CBFS_OK: return kExitOk;
    case CBFS_ERR_INFEASIBLE:
    case CBFS_ERR_MAX_ITERATIONS:
    case CBFS_ERR_INTERNAL: return kExitRuntime;
    default: return kExitValidation;
  }
}

void check(cbfs_status status) {
  if (status == CBFS_OK) return;
  std::cerr << "error (" << cbfs_status_name(status) << "): " << cbfs_last_error() << "\n";
  throw Failure{exit_code_for(status)};
}

// Owns a string returned by the library.
class LibString {
 public:
  ~LibString() { cbfs_string_free(ptr_); }
  char** out() { return &ptr_; }
  std::string str() const { return ptr_ ? ptr_ : ""; }

 private:
  char* ptr_ = nullptr;
};

template <class T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr_); }
  T** out() { return &ptr_; }
  T* get() const { return ptr_; }

 private:
  T* ptr_ = nullptr;
};

using Scenario = Handle<cbfs_scenario, cbfs_scenario_free>;
using Log = Handle<cbfs_log, cbfs_log_free>;

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << data)) {
    std::cerr << "error (io): cannot write '" << path << "'\n";
    throw Failure{kExitValidation};
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error (io): cannot open '" << path << "'\n";
    throw Failure{kExitValidation};
  }
  return {std::istreambuf_iterator<char>(in), {}};
}

void print_summary(const std::string& name, const cbfs_summary& s) {
  std::printf("%s filter=%s min_barrier=%.6g violations=%d intervention_rate=%.4f mean_tracking_error=%.6g "
              "final_ee=(%.5f, %.5f, %.5f) filter_errors=%d\n",
              name.c_str(), s.filter_enabled ? "on" : "off", s.min_barrier, s.violation_count, s.intervention_rate,
              s.mean_tracking_error, s.final_ee_position[0], s.final_ee_position[1], s.final_ee_position[2],
              s.filter_error_count);
}

struct RunArgs {
  std::string scenario;
  bool no_filter = false;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format = "json";
};

int cmd_run(const RunArgs& a) {
  Scenario scenario;
  check(cbfs_scenario_load_file(a.scenario.c_str(), scenario.out()));
  if (a.no_filter) check(cbfs_scenario_set_filter_enabled(scenario.get(), 0));
  if (a.seed) check(cbfs_scenario_set_seed(scenario.get(), *a.seed));
  LibString name;
  check(cbfs_scenario_name(scenario.get(), name.out()));

  Log log;
  check(cbfs_episode_run(scenario.get(), log.out()));
  LibString text;
  check(a.format == "csv" ? cbfs_log_to_csv(log.get(), text.out()) : cbfs_log_to_json(log.get(), text.out()));
  cbfs_summary summary{};
  check(cbfs_log_summary(log.get(), &summary));

  if (a.out_dir.empty()) {
    std::cout << text.str();
  } else {
    std::filesystem::create_directories(a.out_dir);
    const std::string file = (std::filesystem::path(a.out_dir) /
                              (name.str() + (a.no_filter ? "_nofilter" : "_filter") + "." + a.format))
                                 .string();
    write_file(file, text.str());
    print_summary(name.str(), summary);
    std::printf("wrote %s\n", file.c_str());
  }
  if (summary.filter_enabled && summary.violation_count > 0) {
    std::cerr << "safety violation: " << summary.violation_count << " records below the barrier tolerance\n";
    return kExitViolation;
  }
  return kExitOk;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, bool as_json) {
  Log a, b;
  check(cbfs_log_load_file(a_path.c_str(), a.out()));
  check(cbfs_log_load_file(b_path.c_str(), b.out()));
  LibString json, text;
  check(cbfs_compare_logs(a.get(), b.get(), json.out(), text.out()));
  std::cout << (as_json ? json.str() + "\n" : text.str());
  return kExitOk;
}

int cmd_fixtures(const std::string& dir) {
  std::size_t n = 0;
  check(cbfs_fixtures_emit(dir.c_str(), &n));
  std::printf("wrote %zu files to %s\n", n, dir.c_str());
  return kExitOk;
}

int cmd_validate(const std::string& path) {
  Scenario scenario;
  check(cbfs_scenario_load_file(path.c_str(), scenario.out()));
  LibString name;
  check(cbfs_scenario_name(scenario.get(), name.out()));
  std::printf("%s: ok\n", name.str().c_str());
  return kExitOk;
}

int cmd_batch(const std::string& path, std::uint64_t first_seed, int count, int threads, bool no_filter) {
  Scenario scenario;
  check(cbfs_scenario_load_file(path.c_str(), scenario.out()));
  if (no_filter) check(cbfs_scenario_set_filter_enabled(scenario.get(), 0));
  cbfs_batch_result r{};
  check(cbfs_batch_run(scenario.get(), first_seed, count, threads, &r));
  std::printf("{\"episodes\": %d, \"total_violations\": %d, \"worst_min_barrier\": %.17g}\n", r.episodes,
              r.total_violations, r.worst_min_barrier);
  return (!no_filter && r.total_violations > 0) ? kExitViolation : kExitOk;
}

int cmd_encode(const std::string& depth_path, int w, int h, const std::string& out_path, double max_range) {
  const std::string raw = read_file(depth_path);
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (w <= 0 || h <= 0 || raw.size() != n * sizeof(float)) {
    std::cerr << "error (validation): " << depth_path << " holds " << raw.size() << " bytes, expected " << n
              << " float32 values\n";
    return kExitValidation;
  }
  std::vector<float> depth(n);
  std::memcpy(depth.data(), raw.data(), raw.size());
  std::vector<std::uint8_t> rgb(3 * n);
  check(cbfs_depth_to_turbo(depth.data(), w, h, max_range, rgb.data()));
  std::string data;
  if (std::filesystem::path(out_path).extension() == ".ppm")
    data = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  data.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  write_file(out_path, data);
  return kExitOk;
}

int cmd_metrics(const std::string& map, const std::string& reference, const std::string& mask) {
  LibString json;
  check(cbfs_metrics_json(map.c_str(), reference.empty() ? nullptr : reference.c_str(),
                          mask.empty() ? nullptr : mask.c_str(), json.out()));
  std::cout << json.str() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CBF-QP safety filter toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cbfs_version()));

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Roll out a scenario and write its episode log");
  run_cmd->add_option("--scenario", run.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_flag("--no-filter", run.no_filter, "Apply raw damped least-squares steps");
  run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
  run_cmd->add_option("--out", run.out_dir, "Output directory (default: log to stdout)");
  run_cmd->add_option("--format", run.format, "Log format")->check(CLI::IsMember({"json", "csv"}));

  std::string log_a, log_b;
  bool compare_json = false;
  auto* compare_cmd = app.add_subcommand("compare", "Tabulate a with-filter and a without-filter log");
  compare_cmd->add_option("--a", log_a, "First JSON log")->required();
  compare_cmd->add_option("--b", log_b, "Second JSON log")->required();
  compare_cmd->add_flag("--json", compare_json, "Machine-readable output");

  std::string emit_dir;
  auto* fixtures_cmd = app.add_subcommand("fixtures", "Write the shipped scenario fixtures");
  fixtures_cmd->add_option("--emit", emit_dir, "Target directory")->required();

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Load and validate a scenario");
  validate_cmd->add_option("--scenario", validate_path, "Scenario file")->required();

  std::string batch_path;
  std::uint64_t first_seed = 0;
  int seeds = 100;
  int threads = 0;
  bool batch_no_filter = false;
  auto* batch_cmd = app.add_subcommand("batch", "Run a scenario over a range of seeds concurrently");
  batch_cmd->add_option("--scenario", batch_path, "Scenario file")->required();
  batch_cmd->add_option("--first-seed", first_seed, "First seed");
  batch_cmd->add_option("--seeds", seeds, "Number of seeds")->check(CLI::NonNegativeNumber);
  batch_cmd->add_option("--threads", threads, "Worker threads (0: hardware concurrency)");
  batch_cmd->add_flag("--no-filter", batch_no_filter, "Disable the filter");

  std::string depth_path, encode_out;
  int width = 0, height = 0;
  double max_range = 5.0;
  auto* encode_cmd = app.add_subcommand("encode", "Depth (raw float32) to Turbo pseudo-colour RGB");
  encode_cmd->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  encode_cmd->add_option("--depth", depth_path, "Raw little-endian float32 depth, row-major")->required();
  encode_cmd->add_option("--w", width, "Width")->required();
  encode_cmd->add_option("--h", height, "Height")->required();
  encode_cmd->add_option("--out", encode_out, "Output: packed RGB, or binary PPM for *.ppm")->required();
  encode_cmd->add_option("--max-range", max_range, "Clipping range in metres");

  std::string map_path, reference_path, mask_path;
  auto* metrics_cmd = app.add_subcommand("metrics", "Entropy, Pearson alignment and attention mass of a map");
  metrics_cmd->add_option("--map", map_path, "Saliency grid (SMAP or .csv)")->required();
  metrics_cmd->add_option("--reference", reference_path, "Reference intensity grid");
  metrics_cmd->add_option("--mask", mask_path, "Target mask grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*compare_cmd) return cmd_compare(log_a, log_b, compare_json);
    if (*fixtures_cmd) return cmd_fixtures(emit_dir);
    if (*validate_cmd) return cmd_validate(validate_path);
    if (*batch_cmd) return cmd_batch(batch_path, first_seed, seeds, threads, batch_no_filter);
    if (*encode_cmd) return cmd_encode(depth_path, width, height, encode_out, max_range);
    if (*metrics_cmd) return cmd_metrics(map_path, reference_path, mask_path);
  } catch (const Failure& f) {
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
