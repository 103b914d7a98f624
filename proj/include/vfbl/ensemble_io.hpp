#pragma once

#include <iosfwd>
#include <string>

#include "vfbl/paths.hpp"

namespace vfbl {

/// Columnar CSV: path_id,time,V,X with one row per path and node.
void write_csv(const PathEnsemble& ensemble, std::ostream& out);
void write_csv(const PathEnsemble& ensemble, const std::string& path);

/// Binary dump, little-endian:
///   "VFBL" | u16 version (1) | u32 n_steps | u32 start | u64 n_paths | u64 seed
///   | f64 rho | f64 nodes[n_steps + 1] | V, X (n_paths x (m+1)) | dW, dB (n_paths x m)
/// with m = n_steps - start and matrices row-major.
void write_binary(const PathEnsemble& ensemble, std::ostream& out);
void write_binary(const PathEnsemble& ensemble, const std::string& path);

/// Reads a dump back. The kernel factor and base curve are not stored and stay empty.
/// Throws IoError on a bad header or a truncated stream.
PathEnsemble read_binary(std::istream& in);
PathEnsemble read_binary(const std::string& path);

}  // namespace vfbl
