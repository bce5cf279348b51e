#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mortlaw {

inline constexpr int default_truncation_age = 70;

/// Offset k from the truncation age; the true age is truncation_age + k.
struct AgeIndex {
    int k{0};
    int truncation_age{default_truncation_age};

    int true_age() const noexcept { return truncation_age + k; }
};

struct DatasetRow {
    int age_index{0};
    double deaths{0.0};
    double exposure{0.0};

    friend bool operator==(const DatasetRow &, const DatasetRow &) = default;
};

/// Per-age death counts and exposures over a contiguous age range starting at
/// the truncation age. Immutable once constructed; construction validates.
class MortalityDataset {
public:
    static constexpr std::size_t min_rows = 6;

    /// Rows may arrive in any order; they are sorted by age index. Throws
    /// DataError unless indices are contiguous from 0, every E_k > 0, every
    /// D_k >= 0 and there are at least min_rows rows.
    MortalityDataset(std::vector<DatasetRow> rows, int truncation_age = default_truncation_age,
                     std::string label = {});

    std::span<const DatasetRow> rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    int truncation_age() const noexcept { return truncation_age_; }
    int max_age() const noexcept { return truncation_age_ + static_cast<int>(rows_.size()) - 1; }
    const std::string &label() const noexcept { return label_; }

    const DatasetRow &operator[](std::size_t i) const { return rows_[i]; }

    double total_deaths() const noexcept;
    double total_exposure() const noexcept;

    friend bool operator==(const MortalityDataset &, const MortalityDataset &) = default;

private:
    std::vector<DatasetRow> rows_;
    int truncation_age_;
    std::string label_;
};

/// Struct-of-arrays view used by the likelihood kernels. Unlike a dataset it may
/// have holes (leave-one-out folds drop a single age).
struct DeathSample {
    std::vector<double> age_offset;
    std::vector<double> deaths;
    std::vector<double> exposure;

    std::size_t size() const noexcept { return age_offset.size(); }
    bool empty() const noexcept { return age_offset.empty(); }

    static DeathSample from(const MortalityDataset &data);

    /// Copy without position i.
    DeathSample without(std::size_t i) const;
};

struct ParsedCsv {
    MortalityDataset dataset;
    std::size_t dropped_rows{0};
};

/// Reads `age,deaths,exposure` CSV. Rows below the truncation age are dropped
/// and counted. Any malformed content throws ParseError naming the line.
ParsedCsv parse_csv(std::istream &in, int truncation_age = default_truncation_age,
                    std::string label = {});
ParsedCsv parse_csv_file(const std::string &path, int truncation_age = default_truncation_age);

/// Writes canonical CSV (true ages, shortest round-trip numbers, LF endings).
void write_csv(const MortalityDataset &data, std::ostream &out);
void write_csv_file(const MortalityDataset &data, const std::string &path);

enum class Sex { Female, Male, Total };

Sex sex_from_string(const std::string &name);
std::string to_string(Sex sex);

struct HmdSelection {
    int year{0};
    Sex sex{Sex::Total};
    int truncation_age{default_truncation_age};
    /// Drop ages above this (the open "110+" row maps to 110).
    std::optional<int> max_age;
};

/// Joins an HMD 1x1 period deaths file with the matching exposures file.
MortalityDataset parse_hmd(std::istream &deaths, std::istream &exposures,
                           const HmdSelection &selection);
MortalityDataset parse_hmd_files(const std::string &deaths_path, const std::string &exposures_path,
                                 const HmdSelection &selection);

/// Drops rows younger than new_truncation_age and re-zeroes the indices.
MortalityDataset truncate_and_reindex(const MortalityDataset &data, int new_truncation_age);

/// Shortest decimal representation that parses back to the same double.
std::string format_roundtrip(double value);

} // namespace mortlaw
