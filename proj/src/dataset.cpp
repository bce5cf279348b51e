#include "mortlaw/dataset.hpp"

#include "mortlaw/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mortlaw {

namespace {

void strip_cr(std::string &line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

std::string trim(const std::string &s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss{line};
    while (std::getline(ss, field, sep)) {
        fields.push_back(trim(field));
    }
    if (!line.empty() && line.back() == sep) {
        fields.emplace_back();
    }
    return fields;
}

std::vector<std::string> split_ws(const std::string &line) {
    std::vector<std::string> tokens;
    std::istringstream ss{line};
    std::string tok;
    while (ss >> tok) {
        tokens.push_back(tok);
    }
    return tokens;
}

std::optional<double> to_double(const std::string &s) {
    double value = 0.0;
    const auto *begin = s.data();
    const auto *end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || s.empty()) {
        return std::nullopt;
    }
    return value;
}

std::optional<int> to_int(const std::string &s) {
    int value = 0;
    const auto *begin = s.data();
    const auto *end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || s.empty()) {
        return std::nullopt;
    }
    return value;
}

std::ifstream open_input(const std::string &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw ParseError{"cannot open " + path};
    }
    return in;
}

// One HMD 1x1 table: year -> age -> column values (nullopt for ".").
struct HmdTable {
    std::string preamble;
    std::vector<std::string> columns;
    std::map<int, std::map<int, std::vector<std::optional<double>>>> rows;
};

HmdTable read_hmd(std::istream &in, const std::string &what) {
    HmdTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line_no == 1) {
            table.preamble = trim(line);
        }
        const auto tokens = split_ws(line);
        if (tokens.empty()) {
            continue;
        }
        if (!have_header) {
            if (tokens.size() >= 3 && tokens[0] == "Year" && tokens[1] == "Age") {
                table.columns.assign(tokens.begin() + 2, tokens.end());
                have_header = true;
            }
            continue;
        }
        if (tokens.size() != table.columns.size() + 2) {
            throw ParseError{what + ": expected " + std::to_string(table.columns.size() + 2) +
                                 " fields, got " + std::to_string(tokens.size()),
                             line_no};
        }
        // Period files may label years like "1950+" for split intervals; take the digits.
        std::string year_token = tokens[0];
        while (!year_token.empty() && (year_token.back() == '+' || year_token.back() == '-')) {
            year_token.pop_back();
        }
        const auto year = to_int(year_token);
        std::string age_token = tokens[1];
        if (!age_token.empty() && age_token.back() == '+') {
            age_token.pop_back();
        }
        const auto age = to_int(age_token);
        if (!year || !age) {
            throw ParseError{what + ": malformed year/age '" + tokens[0] + " " + tokens[1] + "'",
                             line_no};
        }
        std::vector<std::optional<double>> values;
        for (std::size_t c = 2; c < tokens.size(); ++c) {
            if (tokens[c] == ".") {
                values.emplace_back(std::nullopt);
                continue;
            }
            const auto v = to_double(tokens[c]);
            if (!v) {
                throw ParseError{what + ": non-numeric value '" + tokens[c] + "'", line_no};
            }
            values.emplace_back(*v);
        }
        auto &year_rows = table.rows[*year];
        if (year_rows.contains(*age)) {
            throw ParseError{what + ": duplicate age " + tokens[1] + " for year " + tokens[0],
                             line_no};
        }
        year_rows.emplace(*age, std::move(values));
    }
    if (!have_header) {
        throw ParseError{what + ": missing 'Year Age ...' header line"};
    }
    return table;
}

std::size_t column_index(const HmdTable &table, Sex sex, const std::string &what) {
    const auto wanted = to_string(sex);
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        std::string col = table.columns[i];
        std::transform(col.begin(), col.end(), col.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (col == wanted) {
            return i;
        }
    }
    throw ParseError{what + ": no '" + wanted + "' column"};
}

} // namespace

MortalityDataset::MortalityDataset(std::vector<DatasetRow> rows, int truncation_age,
                                   std::string label)
    : rows_{std::move(rows)}, truncation_age_{truncation_age}, label_{std::move(label)} {
    std::sort(rows_.begin(), rows_.end(),
              [](const DatasetRow &l, const DatasetRow &r) { return l.age_index < r.age_index; });
    if (rows_.size() < min_rows) {
        throw DataError{"dataset needs at least " + std::to_string(min_rows) + " ages, got " +
                        std::to_string(rows_.size())};
    }
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto &row = rows_[i];
        const int age = truncation_age_ + row.age_index;
        if (row.age_index != static_cast<int>(i)) {
            throw DataError{"age indices must be contiguous from 0; found index " +
                            std::to_string(row.age_index) + " at position " + std::to_string(i)};
        }
        if (!std::isfinite(row.exposure) || row.exposure <= 0.0) {
            throw DataError{"exposure must be positive at age " + std::to_string(age)};
        }
        if (!std::isfinite(row.deaths) || row.deaths < 0.0) {
            throw DataError{"deaths must be nonnegative at age " + std::to_string(age)};
        }
    }
}

double MortalityDataset::total_deaths() const noexcept {
    return std::accumulate(rows_.begin(), rows_.end(), 0.0,
                           [](double acc, const DatasetRow &r) { return acc + r.deaths; });
}

double MortalityDataset::total_exposure() const noexcept {
    return std::accumulate(rows_.begin(), rows_.end(), 0.0,
                           [](double acc, const DatasetRow &r) { return acc + r.exposure; });
}

DeathSample DeathSample::from(const MortalityDataset &data) {
    DeathSample sample;
    sample.age_offset.reserve(data.size());
    sample.deaths.reserve(data.size());
    sample.exposure.reserve(data.size());
    for (const auto &row : data.rows()) {
        sample.age_offset.push_back(static_cast<double>(row.age_index));
        sample.deaths.push_back(row.deaths);
        sample.exposure.push_back(row.exposure);
    }
    return sample;
}

DeathSample DeathSample::without(std::size_t i) const {
    DeathSample out = *this;
    out.age_offset.erase(out.age_offset.begin() + static_cast<std::ptrdiff_t>(i));
    out.deaths.erase(out.deaths.begin() + static_cast<std::ptrdiff_t>(i));
    out.exposure.erase(out.exposure.begin() + static_cast<std::ptrdiff_t>(i));
    return out;
}

ParsedCsv parse_csv(std::istream &in, int truncation_age, std::string label) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::map<int, std::pair<DatasetRow, std::size_t>> by_age;
    std::size_t dropped = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) {
            line.erase(0, 3);
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(line, ',');
        if (!have_header) {
            if (fields.size() != 3 || fields[0] != "age" || fields[1] != "deaths" ||
                fields[2] != "exposure") {
                throw ParseError{"expected header 'age,deaths,exposure'", line_no};
            }
            have_header = true;
            continue;
        }
        if (fields.size() != 3) {
            throw ParseError{"expected 3 fields, got " + std::to_string(fields.size()), line_no};
        }
        const auto age = to_int(fields[0]);
        const auto deaths = to_double(fields[1]);
        const auto exposure = to_double(fields[2]);
        if (!age) {
            throw ParseError{"age '" + fields[0] + "' is not an integer", line_no};
        }
        if (!deaths || !std::isfinite(*deaths) || *deaths < 0.0) {
            throw ParseError{"deaths '" + fields[1] + "' is not a nonnegative number", line_no};
        }
        if (!exposure || !std::isfinite(*exposure) || *exposure <= 0.0) {
            throw ParseError{"exposure '" + fields[2] + "' is not a positive number", line_no};
        }
        if (by_age.contains(*age)) {
            throw ParseError{"duplicate age " + std::to_string(*age) + " (first seen on line " +
                                 std::to_string(by_age.at(*age).second) + ")",
                             line_no};
        }
        by_age.emplace(*age, std::pair{DatasetRow{*age, *deaths, *exposure}, line_no});
    }
    if (!have_header) {
        throw ParseError{"empty input: expected header 'age,deaths,exposure'", line_no};
    }
    std::vector<DatasetRow> rows;
    int expected = truncation_age;
    for (const auto &[age, entry] : by_age) {
        if (age < truncation_age) {
            ++dropped;
            continue;
        }
        if (age != expected) {
            throw ParseError{"gap in ages: expected " + std::to_string(expected) + ", found " +
                                 std::to_string(age),
                             entry.second};
        }
        ++expected;
        rows.push_back({age - truncation_age, entry.first.deaths, entry.first.exposure});
    }
    try {
        return {MortalityDataset{std::move(rows), truncation_age, std::move(label)}, dropped};
    } catch (const DataError &e) {
        throw ParseError{e.what()};
    }
}

ParsedCsv parse_csv_file(const std::string &path, int truncation_age) {
    auto in = open_input(path);
    try {
        return parse_csv(in, truncation_age, path);
    } catch (const ParseError &e) {
        throw ParseError{path + ": " + e.what()};
    }
}

std::string format_roundtrip(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string{"nan"};
}

void write_csv(const MortalityDataset &data, std::ostream &out) {
    out << "age,deaths,exposure\n";
    for (const auto &row : data.rows()) {
        out << data.truncation_age() + row.age_index << ',' << format_roundtrip(row.deaths) << ','
            << format_roundtrip(row.exposure) << '\n';
    }
}

void write_csv_file(const MortalityDataset &data, const std::string &path) {
    std::ofstream out{path, std::ios::binary};
    if (!out) {
        throw ParseError{"cannot write " + path};
    }
    write_csv(data, out);
}

Sex sex_from_string(const std::string &name) {
    std::string lowered = name;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lowered == "female") {
        return Sex::Female;
    }
    if (lowered == "male") {
        return Sex::Male;
    }
    if (lowered == "total") {
        return Sex::Total;
    }
    throw ConfigError{"unknown sex '" + name + "' (expected female, male or total)"};
}

std::string to_string(Sex sex) {
    switch (sex) {
    case Sex::Female:
        return "female";
    case Sex::Male:
        return "male";
    case Sex::Total:
        return "total";
    }
    return "total";
}

MortalityDataset parse_hmd(std::istream &deaths, std::istream &exposures,
                           const HmdSelection &selection) {
    const auto death_table = read_hmd(deaths, "deaths");
    const auto exposure_table = read_hmd(exposures, "exposures");
    const auto death_col = column_index(death_table, selection.sex, "deaths");
    const auto exposure_col = column_index(exposure_table, selection.sex, "exposures");

    const auto year_label = std::to_string(selection.year);
    const auto death_year = death_table.rows.find(selection.year);
    if (death_year == death_table.rows.end()) {
        throw ParseError{"deaths: year " + year_label + " not present"};
    }
    const auto exposure_year = exposure_table.rows.find(selection.year);
    if (exposure_year == exposure_table.rows.end()) {
        throw ParseError{"exposures: year " + year_label + " not present"};
    }

    auto in_window = [&](int age) {
        return age >= selection.truncation_age && (!selection.max_age || age <= *selection.max_age);
    };

    std::vector<DatasetRow> rows;
    for (const auto &[age, values] : death_year->second) {
        if (!in_window(age)) {
            continue;
        }
        const auto match = exposure_year->second.find(age);
        if (match == exposure_year->second.end()) {
            throw ParseError{"age " + std::to_string(age) + " in deaths but not in exposures for " +
                             year_label};
        }
        const auto &d = values[death_col];
        const auto &e = match->second[exposure_col];
        if (!d || !e) {
            throw ParseError{"missing value ('.') at age " + std::to_string(age) + " in " +
                             year_label};
        }
        rows.push_back({age - selection.truncation_age, *d, *e});
    }
    for (const auto &[age, values] : exposure_year->second) {
        if (in_window(age) && !death_year->second.contains(age)) {
            throw ParseError{"age " + std::to_string(age) + " in exposures but not in deaths for " +
                             year_label};
        }
    }

    std::string country = death_table.preamble.substr(0, death_table.preamble.find(','));
    std::string label = trim(country);
    label += (label.empty() ? "" : " ") + year_label + " " + to_string(selection.sex);
    try {
        return MortalityDataset{std::move(rows), selection.truncation_age, std::move(label)};
    } catch (const DataError &e) {
        throw ParseError{std::string{"HMD selection invalid: "} + e.what()};
    }
}

MortalityDataset parse_hmd_files(const std::string &deaths_path, const std::string &exposures_path,
                                 const HmdSelection &selection) {
    auto deaths = open_input(deaths_path);
    auto exposures = open_input(exposures_path);
    return parse_hmd(deaths, exposures, selection);
}

MortalityDataset truncate_and_reindex(const MortalityDataset &data, int new_truncation_age) {
    if (new_truncation_age < data.truncation_age() || new_truncation_age > data.max_age()) {
        throw DataError{"truncation age " + std::to_string(new_truncation_age) +
                        " outside dataset range [" + std::to_string(data.truncation_age()) + ", " +
                        std::to_string(data.max_age()) + "]"};
    }
    const int shift = new_truncation_age - data.truncation_age();
    std::vector<DatasetRow> rows;
    for (const auto &row : data.rows()) {
        if (row.age_index >= shift) {
            rows.push_back({row.age_index - shift, row.deaths, row.exposure});
        }
    }
    return MortalityDataset{std::move(rows), new_truncation_age, data.label()};
}

} // namespace mortlaw
