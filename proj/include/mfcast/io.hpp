#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfcast/alignment.hpp"
#include "mfcast/evaluation.hpp"
#include "mfcast/series.hpp"

namespace mfcast {

// Per-frequency-group CSV: header `t,<id1>,<id2>,...` with `t` the 1-based
// period index in that frequency. Empty cells are missing values.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;       // per header entry after `t`
    std::vector<std::vector<bool>> missing;
};

CsvTable read_series_csv(const std::filesystem::path& path);
void write_series_csv(const std::filesystem::path& path, const CsvTable& table);

// Dataset manifest (JSON): maps the target and each covariate id to its file
// and mismatch ratio. `impute_leading_zeros` turns leading missing values
// into zeros at load time (off by default).
MixedFrequencyDataset load_dataset(const std::filesystem::path& manifest_path);
void save_dataset(const MixedFrequencyDataset& ds, const std::filesystem::path& directory,
                  const std::string& manifest_name = "manifest.json");

// Aligned design CSV: `t,valid,<series>_l<lag>[,...]`; AR columns are
// suffixed `_ar`. Invalid entries are empty.
void write_aligned_csv(const std::filesystem::path& path, const AlignedDesign& ad);

// Forecast records CSV: origin,target,h_m,forecast,actual.
void write_forecasts_csv(const std::filesystem::path& path,
                         const std::vector<ForecastRecord>& records);
std::vector<ForecastRecord> read_forecasts_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace mfcast
