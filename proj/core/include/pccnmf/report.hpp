#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pccnmf {

inline constexpr int kReportSchema = 1;
inline constexpr const char* kVersion = "0.1.0";

/// Envelope written around every CLI result. Numeric payloads live under
/// `outputs`. The timestamp honours SOURCE_DATE_EPOCH, so identical runs
/// produce identical bytes when it is set.
struct RunReport {
  std::string command;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::vector<std::uint64_t> seeds;
  nlohmann::ordered_json input_digests = nlohmann::ordered_json::object();
  nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
  std::string timestamp;

  nlohmann::ordered_json to_json() const;
};

std::string digest_hex(std::uint64_t digest);
/// Current UTC time, or SOURCE_DATE_EPOCH when that is set.
std::string utc_timestamp();

void write_json(const std::filesystem::path& path,
                const nlohmann::ordered_json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pccnmf
