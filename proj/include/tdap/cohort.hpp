#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tdap/error.hpp"

namespace tdap {

/// One subject: follow-up time X, event indicator delta, and one or two
/// precomputed risk scores.
struct SubjectRecord {
    double time = 0.0;
    int status = 0;
    double score1 = 0.0;
    std::optional<double> score2;
};

/// Which of the two risk scores an estimator reads.
enum class Score { first, second };

/// Immutable, validated cohort stored column-wise. Row order is preserved.
class CohortSample {
public:
    CohortSample() = default;

    explicit CohortSample(std::span<const SubjectRecord> records) {
        if (records.empty()) {
            throw Error(ErrorKind::EmptyCohort);
        }
        const bool paired = records.front().score2.has_value();
        times_.reserve(records.size());
        status_.reserve(records.size());
        score1_.reserve(records.size());
        if (paired) score2_.reserve(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            const auto row = std::to_string(i + 1);
            if (!std::isfinite(r.time) || r.time <= 0.0) {
                throw Error(ErrorKind::NonPositiveTime, "row " + row);
            }
            if (r.status != 0 && r.status != 1) {
                throw Error(ErrorKind::InvalidStatus, "row " + row);
            }
            if (!std::isfinite(r.score1)) {
                throw Error(ErrorKind::NonNumericCell, "row " + row + ", column score1");
            }
            if (r.score2.has_value() != paired) {
                throw Error(ErrorKind::NonNumericCell,
                            "row " + row + ", column score2 (mixed presence)");
            }
            if (paired && !std::isfinite(*r.score2)) {
                throw Error(ErrorKind::NonNumericCell, "row " + row + ", column score2");
            }
            times_.push_back(r.time);
            status_.push_back(static_cast<std::uint8_t>(r.status));
            score1_.push_back(r.score1);
            if (paired) score2_.push_back(*r.score2);
        }
        paired_ = paired;
    }

    std::size_t size() const noexcept { return times_.size(); }
    bool empty() const noexcept { return times_.empty(); }
    bool paired() const noexcept { return paired_; }

    std::span<const double> times() const noexcept { return times_; }
    std::span<const std::uint8_t> statuses() const noexcept { return status_; }

    std::span<const double> scores(Score which = Score::first) const {
        if (which == Score::second) {
            if (!paired_) throw Error(ErrorKind::NotPaired);
            return score2_;
        }
        return score1_;
    }

    SubjectRecord record(std::size_t i) const {
        SubjectRecord r{times_.at(i), status_.at(i), score1_.at(i), std::nullopt};
        if (paired_) r.score2 = score2_[i];
        return r;
    }

    std::vector<SubjectRecord> records() const {
        std::vector<SubjectRecord> out;
        out.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) out.push_back(record(i));
        return out;
    }

    /// Subjects picked by index, with repetition. Used for bootstrap
    /// resamples; the source rows are already valid.
    CohortSample select(std::span<const std::size_t> rows) const {
        if (rows.empty()) throw Error(ErrorKind::EmptyCohort);
        CohortSample out;
        out.paired_ = paired_;
        out.times_.reserve(rows.size());
        out.status_.reserve(rows.size());
        out.score1_.reserve(rows.size());
        if (paired_) out.score2_.reserve(rows.size());
        for (auto i : rows) {
            out.times_.push_back(times_.at(i));
            out.status_.push_back(status_[i]);
            out.score1_.push_back(score1_[i]);
            if (paired_) out.score2_.push_back(score2_[i]);
        }
        return out;
    }

    /// Copy with score1 and score2 swapped.
    CohortSample swapped_scores() const {
        if (!paired_) throw Error(ErrorKind::NotPaired);
        CohortSample out = *this;
        std::swap(out.score1_, out.score2_);
        return out;
    }

private:
    std::vector<double> times_;
    std::vector<std::uint8_t> status_;
    std::vector<double> score1_;
    std::vector<double> score2_;
    bool paired_ = false;
};

struct ColumnMap {
    std::string time = "time";
    std::string status = "status";
    std::string score1 = "score";
    // Used when present in the header; absence yields an unpaired cohort.
    std::optional<std::string> score2 = "score2";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') {
            quoted = !quoted;
        } else if (line[i] == ',' && !quoted) {
            cells.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    cells.push_back(trim(line.substr(start)));
    return cells;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace detail

/// Parses a header-first CSV stream into a validated cohort.
inline CohortSample ingest_csv(std::istream& in, const ColumnMap& columns = {}) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::string_view view = line;
        if (view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
        for (auto cell : detail::split_csv_line(view)) header.emplace_back(cell);
        break;
    }
    if (header.empty()) throw Error(ErrorKind::EmptyCohort, "no header row");

    auto find = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    auto require = [&](const std::string& name) {
        const auto idx = find(name);
        if (!idx) throw Error(ErrorKind::MissingColumn, name);
        return *idx;
    };
    const std::size_t time_col = require(columns.time);
    const std::size_t status_col = require(columns.status);
    const std::size_t score1_col = require(columns.score1);
    const std::optional<std::size_t> score2_col =
        columns.score2 ? find(*columns.score2) : std::nullopt;

    std::vector<SubjectRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        const auto cells = detail::split_csv_line(line);
        auto cell = [&](std::size_t col, const std::string& name) {
            const auto value =
                col < cells.size() ? detail::parse_double(cells[col]) : std::nullopt;
            if (!value || !std::isfinite(*value)) {
                throw Error(ErrorKind::NonNumericCell,
                            "row " + std::to_string(row) + ", column " + name);
            }
            return *value;
        };
        SubjectRecord r;
        r.time = cell(time_col, columns.time);
        if (r.time <= 0.0) {
            throw Error(ErrorKind::NonPositiveTime, "row " + std::to_string(row));
        }
        const double status = cell(status_col, columns.status);
        if (status != 0.0 && status != 1.0) {
            throw Error(ErrorKind::InvalidStatus, "row " + std::to_string(row));
        }
        r.status = static_cast<int>(status);
        r.score1 = cell(score1_col, columns.score1);
        if (score2_col) r.score2 = cell(*score2_col, *columns.score2);
        records.push_back(r);
    }
    if (records.empty()) throw Error(ErrorKind::EmptyCohort);
    return CohortSample(records);
}

/// Writes the mapped columns back out at full round-trip precision.
inline void write_csv(std::ostream& out, const CohortSample& cohort,
                      const ColumnMap& columns = {}) {
    out << columns.time << ',' << columns.status << ',' << columns.score1;
    if (cohort.paired()) out << ',' << columns.score2.value_or("score2");
    out << '\n';
    const auto t = cohort.times();
    const auto d = cohort.statuses();
    const auto z1 = cohort.scores(Score::first);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        out << detail::format_double(t[i]) << ',' << int(d[i]) << ','
            << detail::format_double(z1[i]);
        if (cohort.paired()) out << ',' << detail::format_double(cohort.scores(Score::second)[i]);
        out << '\n';
    }
}

/// Checks that t0 lies inside the observed follow-up and that at least one
/// event is observed before it.
inline void validate_horizon(const CohortSample& cohort, double t0) {
    if (!std::isfinite(t0) || t0 <= 0.0) {
        throw Error(ErrorKind::InvalidArgument, "t0 must be positive and finite");
    }
    if (cohort.empty()) throw Error(ErrorKind::EmptyCohort);
    const auto t = cohort.times();
    const auto d = cohort.statuses();
    if (t0 > *std::max_element(t.begin(), t.end())) {
        throw Error(ErrorKind::T0BeyondSupport, "t0 = " + detail::format_double(t0));
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 && d[i] == 1) return;
    }
    throw Error(ErrorKind::NoEventsBeforeT0, "t0 = " + detail::format_double(t0));
}

} // namespace tdap
