#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ghcm/geometry.hpp"

namespace ghcm {

// Binary instance framing, all integers and doubles little-endian:
//
//   char[4]  magic "GHCM"
//   u16      version (= kInstanceFormatVersion)
//   u32      byte length L of the spec JSON
//   char[L]  spec JSON (UTF-8, no terminator)
//   u64      sampling seed
//   u64      N, number of vertices
//   f64[N*d] positions, vertex-major (x_0[0..d), x_1[0..d), ...)
//   i32[N]   ground-truth labels (values from spec.labels)
//   u64      M, number of observed pairs
//   M x { u32 u, u32 v, f64 y }   with u < v, sorted by (u, v)
inline constexpr std::uint16_t kInstanceFormatVersion = 1;

nlohmann::json instance_to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& j);

void write_instance_binary(const Instance& instance, std::ostream& out);
Instance read_instance_binary(std::istream& in);

// Writes JSON when `path` ends in ".json", binary otherwise.
void save_instance(const Instance& instance, const std::string& path);
// Detects the format from the leading magic bytes.
Instance load_instance(const std::string& path);

}  // namespace ghcm
