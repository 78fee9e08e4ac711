#include "mfcast/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mfcast/errors.hpp"

namespace mfcast {

using nlohmann::json;

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

CsvTable read_series_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("cannot open CSV " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw DomainError("empty CSV " + path.string());
    std::vector<std::string> head = split_csv_line(line);
    if (head.empty() || head[0] != "t")
        throw DomainError("CSV " + path.string() + ": first header column must be 't'");

    CsvTable table;
    table.header.assign(head.begin() + 1, head.end());
    table.columns.resize(table.header.size());
    table.missing.resize(table.header.size());

    long expected_t = 1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != head.size())
            throw DomainError("CSV " + path.string() + ": ragged row at t=" +
                              std::to_string(expected_t));
        if (std::stol(cells[0]) != expected_t)
            throw DomainError("CSV " + path.string() + ": period index not contiguous at t=" +
                              std::to_string(expected_t));
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (cells[c].empty()) {
                table.columns[c - 1].push_back(0.0);
                table.missing[c - 1].push_back(true);
            } else {
                table.columns[c - 1].push_back(std::stod(cells[c]));
                table.missing[c - 1].push_back(false);
            }
        }
        ++expected_t;
    }
    return table;
}

void write_series_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream os(path);
    if (!os) throw DomainError("cannot write CSV " + path.string());
    os << "t";
    for (const auto& h : table.header) os << ',' << h;
    os << '\n';
    const std::size_t n = table.columns.empty() ? 0 : table.columns[0].size();
    for (std::size_t t = 0; t < n; ++t) {
        os << (t + 1);
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            os << ',';
            const bool miss = !table.missing[c].empty() && table.missing[c][t];
            if (!miss) os << format_double(table.columns[c][t]);
        }
        os << '\n';
    }
}

MixedFrequencyDataset load_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw DomainError("cannot open manifest " + manifest_path.string());
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("manifest parse error: " + std::string(e.what()));
    }

    const auto dir = manifest_path.parent_path();
    const bool impute = doc.value("impute_leading_zeros", false);

    std::map<std::string, CsvTable> tables;
    auto column_of = [&](const std::string& file, const std::string& id) -> std::pair<std::vector<double>, std::vector<bool>> {
        auto it = tables.find(file);
        if (it == tables.end()) it = tables.emplace(file, read_series_csv(dir / file)).first;
        const CsvTable& t = it->second;
        for (std::size_t c = 0; c < t.header.size(); ++c)
            if (t.header[c] == id) return {t.columns[c], t.missing[c]};
        throw DomainError("series '" + id + "' not found in " + file);
    };

    auto apply_impute = [impute](std::vector<double>& values, std::vector<bool>& missing) {
        if (!impute || missing.empty()) return;
        for (std::size_t i = 0; i < missing.size(); ++i) {
            if (!missing[i]) break;
            missing[i] = false;
            values[i] = 0.0;
        }
        bool any = false;
        for (bool b : missing) any = any || b;
        if (!any) missing.clear();
    };

    MixedFrequencyDataset ds;
    const auto& target = doc.at("target");
    ds.target.id = target.at("id").get<std::string>();
    ds.target.ratio = 1;
    auto [tv, tm] = column_of(target.at("file").get<std::string>(), ds.target.id);
    ds.target.values = std::move(tv);
    ds.target.missing = std::move(tm);
    apply_impute(ds.target.values, ds.target.missing);
    {
        bool any = false;
        for (bool b : ds.target.missing) any = any || b;
        if (!any) ds.target.missing.clear();
    }

    for (const auto& cov : doc.at("covariates")) {
        Series s;
        s.id = cov.at("id").get<std::string>();
        s.ratio = cov.at("ratio").get<int>();
        auto [cv, cm] = column_of(cov.at("file").get<std::string>(), s.id);
        s.values = std::move(cv);
        s.missing = std::move(cm);
        apply_impute(s.values, s.missing);
        bool any = false;
        for (bool b : s.missing) any = any || b;
        if (!any) s.missing.clear();
        ds.covariates.push_back(std::move(s));
    }
    return ds;
}

void save_dataset(const MixedFrequencyDataset& ds, const std::filesystem::path& directory,
                  const std::string& manifest_name) {
    std::filesystem::create_directories(directory);

    // Group series by ratio, one CSV per frequency.
    std::map<int, std::vector<const Series*>> groups;
    groups[1].push_back(&ds.target);
    for (const auto& s : ds.covariates) groups[s.ratio].push_back(&s);

    json manifest;
    manifest["target"] = {{"id", ds.target.id}, {"file", "freq_m1.csv"}};
    manifest["covariates"] = json::array();
    for (const auto& [ratio, list] : groups) {
        const std::string file = "freq_m" + std::to_string(ratio) + ".csv";
        CsvTable table;
        for (const Series* s : list) {
            table.header.push_back(s->id);
            table.columns.push_back(s->values);
            std::vector<bool> miss = s->missing;
            if (miss.empty()) miss.assign(s->values.size(), false);
            table.missing.push_back(std::move(miss));
            if (s != &ds.target)
                manifest["covariates"].push_back({{"id", s->id}, {"ratio", ratio}, {"file", file}});
        }
        write_series_csv(directory / file, table);
    }

    std::ofstream os(directory / manifest_name);
    if (!os) throw DomainError("cannot write manifest");
    os << manifest.dump(2) << '\n';
}

void write_aligned_csv(const std::filesystem::path& path, const AlignedDesign& ad) {
    std::ofstream os(path);
    if (!os) throw DomainError("cannot write " + path.string());
    os << "t,valid," << "y";
    for (const auto& col : ad.columns)
        os << ',' << col.series_id << "_l" << col.lag << (col.is_ar ? "_ar" : "");
    os << '\n';
    for (int r = 0; r < ad.rows(); ++r) {
        os << ad.period[r] << ',' << (ad.valid[r] ? 1 : 0) << ',' << format_double(ad.y[r]);
        for (int c = 0; c < ad.cols(); ++c) os << ',' << format_double(ad.X(r, c));
        os << '\n';
    }
}

void write_forecasts_csv(const std::filesystem::path& path,
                         const std::vector<ForecastRecord>& records) {
    std::ofstream os(path);
    if (!os) throw DomainError("cannot write " + path.string());
    os << "origin,target,h_m,forecast,actual\n";
    for (const auto& r : records)
        os << r.origin << ',' << r.target << ',' << r.h_m << ',' << format_double(r.forecast)
           << ',' << format_double(r.actual) << '\n';
}

std::vector<ForecastRecord> read_forecasts_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw DomainError("empty forecast CSV " + path.string());
    std::vector<ForecastRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 5) throw DomainError("bad forecast CSV row: " + line);
        ForecastRecord r;
        r.origin = std::stoi(cells[0]);
        r.target = std::stoi(cells[1]);
        r.h_m = std::stoi(cells[2]);
        r.forecast = std::stod(cells[3]);
        r.actual = std::stod(cells[4]);
        out.push_back(r);
    }
    return out;
}

}  // namespace mfcast
