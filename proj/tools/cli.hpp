#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace expdesign::cli {

using Json = nlohmann::ordered_json;

/// Everything needed to replay a run bit for bit: the command line, the
/// effective configuration, the seed and the library version. Wall-clock time
/// is informational only.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  Json config = Json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  Json to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
  std::string started_utc_;
};

void write_json(const std::filesystem::path& path, const Json& j);

// Warnings go to stderr and never change the exit code.
void report_warnings(const std::vector<std::string>& warnings);

struct Context {
  std::vector<std::string> argv;
};

void add_design_command(CLI::App& app, const Context& ctx);
void add_infer_command(CLI::App& app, const Context& ctx);
void add_simulate_command(CLI::App& app, const Context& ctx);
void add_eta_command(CLI::App& app, const Context& ctx);

}  // namespace expdesign::cli
