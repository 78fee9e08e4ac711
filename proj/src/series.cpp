#include "mfcast/series.hpp"

namespace mfcast {

std::vector<double> growth_rate(const std::vector<double>& levels) {
    std::vector<double> out;
    if (levels.size() < 2) return out;
    out.reserve(levels.size() - 1);
    for (std::size_t t = 0; t + 1 < levels.size(); ++t) {
        if (!(levels[t] > 0.0))
            throw DomainError("growth_rate: non-positive level at index " + std::to_string(t + 1));
        out.push_back(100.0 * (levels[t + 1] - levels[t]) / levels[t]);
    }
    if (!(levels.back() > 0.0))
        throw DomainError("growth_rate: non-positive level at index " + std::to_string(levels.size()));
    return out;
}

ValidationReport validate_dataset(const MixedFrequencyDataset& ds) {
    ValidationReport report;
    if (ds.target.ratio != 1)
        report.violations.push_back({ds.target.id, 1, ds.target.ratio});
    const long n = ds.periods();
    for (const auto& cov : ds.covariates) {
        const long expected = static_cast<long>(cov.ratio) * n;
        if (cov.ratio < 1 || cov.length() != expected)
            report.violations.push_back({cov.id, expected, cov.length()});
    }
    return report;
}

}  // namespace mfcast
