#pragma once

#include <string>
#include <vector>

#include "mfcast/errors.hpp"

namespace mfcast {

// One observed time series at its own sampling frequency. Period indices are
// abstract 1-based integers; `ratio` is the number of observations per
// low-frequency period (1 for low-frequency series). Missing observations are
// tracked by an explicit mask, never by sentinel values.
struct Series {
    std::string id;
    std::vector<double> values;
    int ratio = 1;
    std::vector<bool> missing;  // empty means fully observed

    int length() const { return static_cast<int>(values.size()); }

    // 1-based access.
    double at(int t) const {
        if (t < 1 || t > length()) throw ShapeError("series '" + id + "': index out of range");
        return values[static_cast<std::size_t>(t - 1)];
    }

    bool is_missing(int t) const {
        if (missing.empty()) return false;
        return missing[static_cast<std::size_t>(t - 1)];
    }
};

// One low-frequency target plus covariates with per-series mismatch ratios.
// Immutable after construction by convention; safe to share across workers.
struct MixedFrequencyDataset {
    Series target;  // ratio must be 1
    std::vector<Series> covariates;

    int periods() const { return target.length(); }

    const Series& covariate(const std::string& id) const {
        for (const auto& s : covariates)
            if (s.id == id) return s;
        throw DomainError("unknown covariate '" + id + "'");
    }

    bool has_covariate(const std::string& id) const {
        for (const auto& s : covariates)
            if (s.id == id) return true;
        return false;
    }
};

struct DatasetViolation {
    std::string series_id;
    long expected_length = 0;
    long actual_length = 0;
};

struct ValidationReport {
    std::vector<DatasetViolation> violations;

    bool ok() const { return violations.empty(); }

    std::string str() const {
        if (ok()) return "dataset valid";
        std::string out;
        for (const auto& v : violations) {
            out += "series '" + v.series_id + "': expected length " +
                   std::to_string(v.expected_length) + ", got " +
                   std::to_string(v.actual_length) + "\n";
        }
        return out;
    }
};

// Percentage growth rate of a positive level series:
// out[t] = 100*(levels[t+1]-levels[t])/levels[t].
std::vector<double> growth_rate(const std::vector<double>& levels);

// Reports every covariate whose length differs from ratio * target length.
ValidationReport validate_dataset(const MixedFrequencyDataset& ds);

}  // namespace mfcast
