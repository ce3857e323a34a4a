#include <ctime>
#include <iostream>

#include "cli.hpp"
#include "expdesign/io.hpp"

namespace expdesign::cli {

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  started_utc_ = buf;
}

Json RunManifest::to_json() const {
  Json j;
  j["command"] = command_;
  j["argv"] = argv_;
  j["library_version"] = EXPDESIGN_VERSION;
  j["seed"] = seed;
  j["config"] = config;
  j["started_utc"] = started_utc_;
  j["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  j["warnings"] = warnings;
  return j;
}

void RunManifest::write(const std::filesystem::path& path) const { write_json(path, to_json()); }

void write_json(const std::filesystem::path& path, const Json& j) {
  io::write_text(path, j.dump(2) + "\n");
}

void report_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace expdesign::cli
