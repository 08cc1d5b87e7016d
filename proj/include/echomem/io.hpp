// Artifact emission: CSV (comma-separated, header row, LF) and JSON with
// stable key order and floating-point values fixed to 12 significant
// digits, so identical runs produce byte-identical files. Writes go to a
// temporary file first and are renamed into place.

#pragma once

#include "echomem/echo_lab.hpp"
#include "echomem/waveform.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace echomem {

using Json = nlohmann::ordered_json;

std::string format_sig(double v); // %.12g

// Serializer with %.12g for every floating value (nlohmann's own dump uses
// shortest-roundtrip formatting, which is not what the file contract says).
std::string dump_json(const Json& j, int indent = 2);

void write_file_atomic(const std::filesystem::path& path, const std::string& content);

void write_json_file(const std::filesystem::path& path, const Json& j);

// t, Re E, Im E, |E|^2
void write_waveform_csv(const std::filesystem::path& path, const Waveform& w);

// t, Re A, Im A, intensity
void write_trace_csv(const std::filesystem::path& path, const EchoTrace& trace);

// phase, intensity
void write_fringe_csv(const std::filesystem::path& path, const FringeScan& scan);

void write_table_csv(const std::filesystem::path& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

std::uint64_t fnv1a(const std::string& bytes);
std::string fnv1a_hex(const std::string& bytes);

inline constexpr const char* kVersion = "0.1.0";

} // namespace echomem
