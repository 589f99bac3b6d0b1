#pragma once

#include <string>

#include "core/fit.hpp"

namespace bpc {

// Fit archive: magic "BPCFIT1\0", a JSON metadata section, a little-endian
// float64 draw block, and a trailing FNV-1a checksum.  Numeric content
// round-trips bit-exactly; version or checksum mismatches are rejected.
void save_fit(const PosteriorFit& fit, const std::string& path);
PosteriorFit load_fit(const std::string& path);

// Reload the dataset a fit was built from, using the archived ingest spec,
// and verify the content fingerprint recorded at fit time.
ContestDataset load_fit_dataset(const PosteriorFit& fit, const std::string& data_path);

inline constexpr int kArchiveFormatVersion = 1;

// test hook: write an archive claiming a different format version
void save_fit_with_version(const PosteriorFit& fit, const std::string& path, int version);

}  // namespace bpc
