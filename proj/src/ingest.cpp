#include "shipcast/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <iterator>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "shipcast/csv.hpp"
#include "shipcast/error.hpp"
#include "shipcast/rng.hpp"

namespace shipcast::ingest {

std::string_view to_string(ShippingModeLabel mode) {
    switch (mode) {
        case ShippingModeLabel::FirstClass: return "First Class";
        case ShippingModeLabel::SameDay: return "Same Day";
        case ShippingModeLabel::SecondClass: return "Second Class";
        case ShippingModeLabel::StandardClass: return "Standard Class";
    }
    return "?";
}

std::optional<ShippingModeLabel> parse_mode(std::string_view label) {
    while (!label.empty() && label.front() == ' ') label.remove_prefix(1);
    while (!label.empty() && (label.back() == ' ' || label.back() == '\r')) label.remove_suffix(1);
    for (auto m : kAllModes) {
        if (to_string(m) == label) return m;
    }
    return std::nullopt;
}

namespace {

std::string_view strip(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    s = strip(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) return std::nullopt;
    }
    return value;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (strip(header[i]) == name) return i;
    }
    throw DataError(fmt::format("transactions CSV: missing column '{}'", name));
}

}  // namespace

ParseResult parse_transactions(std::istream& source, const ColumnSchema& schema) {
    CsvReader reader(source);
    std::vector<std::string> header;
    if (!reader.next(header) || (header.size() == 1 && strip(header[0]).empty())) {
        throw DataError("transactions CSV: empty file");
    }
    // UTF-8 byte order mark
    if (header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

    const std::size_t c_date = find_column(header, schema.order_date);
    const std::size_t c_qty = find_column(header, schema.quantity);
    const std::size_t c_mode = find_column(header, schema.shipping_mode);
    const std::size_t c_days = find_column(header, schema.delivery_days);
    const std::size_t c_price = find_column(header, schema.unit_price);
    const std::size_t needed = std::max({c_date, c_qty, c_mode, c_days, c_price}) + 1;

    ParseResult result;
    auto& rep = result.report;
    auto skip = [&rep](const char* reason) {
        ++rep.rows_skipped;
        ++rep.skip_reasons[reason];
    };

    std::vector<std::string> row;
    while (reader.next(row)) {
        ++rep.rows_read;
        if (row.size() == 1 && strip(row[0]).empty()) {
            skip("empty_row");
            continue;
        }
        if (row.size() < needed) {
            skip("field_count");
            continue;
        }
        const auto date = parse_date(row[c_date]);
        if (!date) {
            skip("bad_date");
            continue;
        }
        const auto qty = parse_number<std::int64_t>(row[c_qty]);
        if (!qty) {
            skip("bad_quantity");
            continue;
        }
        if (*qty < 1) {
            skip("nonpositive_quantity");
            continue;
        }
        const auto mode = parse_mode(row[c_mode]);
        if (!mode) {
            skip("unknown_mode");
            continue;
        }
        const auto days = parse_number<double>(row[c_days]);
        if (!days) {
            skip("bad_delivery_days");
            continue;
        }
        if (*days < 0.0) {
            skip("negative_delivery_days");
            continue;
        }
        const auto price = parse_number<double>(row[c_price]);
        if (!price) {
            skip("bad_unit_price");
            continue;
        }
        if (*price < 0.0) {
            skip("negative_unit_price");
            continue;
        }
        result.records.push_back(TransactionRecord{*date, *qty, *mode, *days, *price});
        ++rep.rows_accepted;
    }
    return result;
}

WeeklySeries aggregate_weekly(std::span<const TransactionRecord> records, const AggregateOptions& opts) {
    if (records.empty()) throw std::invalid_argument("aggregate_weekly: no records");
    auto [lo, hi] = std::minmax_element(records.begin(), records.end(),
                                        [](const auto& a, const auto& b) { return a.order_date < b.order_date; });
    const Date first = week_start(lo->order_date, opts.anchor);
    const Date last = week_start(hi->order_date, opts.anchor);
    const auto weeks = static_cast<std::size_t>((last - first).count() / 7 + 1);

    std::vector<std::int64_t> buckets(weeks, 0);
    for (const auto& r : records) {
        const auto idx = static_cast<std::size_t>((week_start(r.order_date, opts.anchor) - first).count() / 7);
        buckets[idx] += r.quantity;
    }
    if (opts.drop_trailing_weeks >= buckets.size()) {
        throw std::invalid_argument(fmt::format("aggregate_weekly: cannot drop {} of {} weeks",
                                                opts.drop_trailing_weeks, buckets.size()));
    }
    buckets.resize(buckets.size() - opts.drop_trailing_weeks);
    std::vector<double> values(buckets.begin(), buckets.end());
    return WeeklySeries(first, std::move(values));
}

std::vector<ModeStats> extract_mode_stats(std::span<const TransactionRecord> records) {
    if (records.empty()) throw std::invalid_argument("extract_mode_stats: no records");
    struct Acc {
        std::size_t n = 0;
        double days = 0.0;
        double price = 0.0;
    };
    std::array<Acc, kAllModes.size()> acc{};
    for (const auto& r : records) {
        auto& a = acc[static_cast<std::size_t>(r.shipping_mode)];
        ++a.n;
        a.days += r.actual_delivery_days;
        a.price += r.unit_price;
    }
    std::vector<ModeStats> out;
    const double total = static_cast<double>(records.size());
    for (auto m : kAllModes) {
        const auto& a = acc[static_cast<std::size_t>(m)];
        if (a.n == 0) continue;
        const double n = static_cast<double>(a.n);
        out.push_back(ModeStats{m, a.days / n, a.n, n / total, a.price / n});
    }
    return out;
}

std::int64_t capacity_proxy(const ModeStats& stats, std::int64_t demand, double headroom) {
    if (demand < 0 || headroom <= 0.0) throw std::invalid_argument("capacity_proxy: demand >= 0 and headroom > 0");
    return static_cast<std::int64_t>(std::llround(stats.volume_share * static_cast<double>(demand) * headroom));
}

std::pair<WeeklySeries, WeeklySeries> temporal_split(const WeeklySeries& series, std::size_t train_len) {
    if (train_len == 0 || train_len >= series.size()) {
        throw std::invalid_argument(fmt::format("temporal_split: train_len {} must be in [1, {})", train_len,
                                                series.size()));
    }
    const auto v = series.values();
    WeeklySeries train(series.start_week(), {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(train_len)});
    WeeklySeries test(series.week(train_len), {v.begin() + static_cast<std::ptrdiff_t>(train_len), v.end()});
    return {std::move(train), std::move(test)};
}

SyntheticTransactionsSpec default_synthetic_transactions(std::uint64_t seed) {
    SyntheticTransactionsSpec spec;
    spec.weekly.length = 162;
    spec.weekly.base = 430.0;
    spec.weekly.trend_slope = 0.35;
    spec.weekly.seasonals = {{4, 25.0}, {52, 45.0}};
    spec.weekly.noise_sd = 18.0;
    spec.weekly.seed = seed;
    spec.weekly.start_week = Date{std::chrono::year{2015} / std::chrono::January / 5};
    spec.seed = seed + 1;
    return spec;
}

std::vector<TransactionRecord> synthesize_transactions(const SyntheticTransactionsSpec& spec) {
    const auto weekly = make_synthetic(spec.weekly);
    double share_total = 0.0;
    for (double s : spec.mode_share) {
        if (!(s >= 0.0)) throw std::invalid_argument("synthesize_transactions: mode shares must be >= 0");
        share_total += s;
    }
    if (!(share_total > 0.0)) throw std::invalid_argument("synthesize_transactions: mode shares sum to 0");
    static constexpr double kPrices[] = {9.99, 24.99, 39.99, 59.99, 129.99};

    SplitMix64 rng(spec.seed);
    std::vector<TransactionRecord> out;
    for (std::size_t w = 0; w < weekly.size(); ++w) {
        auto remaining = static_cast<std::int64_t>(std::llround(weekly[w]));
        while (remaining > 0) {
            const auto q = std::min<std::int64_t>(remaining, 1 + static_cast<std::int64_t>(rng.index(5)));
            remaining -= q;
            TransactionRecord r;
            r.order_date = weekly.week(w) + std::chrono::days{static_cast<long>(rng.index(7))};
            r.quantity = q;
            double u = rng.uniform() * share_total;
            std::size_t m = 0;
            while (m + 1 < kAllModes.size() && u >= spec.mode_share[m]) u -= spec.mode_share[m++];
            r.shipping_mode = kAllModes[m];
            const int days = spec.mean_days[m] - 1 + static_cast<int>(rng.index(3));
            r.actual_delivery_days = std::max(days, 0);
            r.unit_price = kPrices[rng.index(std::size(kPrices))];
            out.push_back(r);
        }
    }
    return out;
}

void write_transactions_csv(std::ostream& out, std::span<const TransactionRecord> records,
                            const ColumnSchema& schema) {
    out << "Order Id," << csv_field(schema.order_date) << ',' << csv_field(schema.quantity) << ','
        << csv_field(schema.shipping_mode) << ',' << csv_field(schema.delivery_days) << ','
        << csv_field(schema.unit_price) << '\n';
    std::size_t id = 1;
    for (const auto& r : records) {
        const std::chrono::year_month_day d{r.order_date};
        out << fmt::format("{},{}/{}/{} 0:00,{},{},{},{}\n", id++, unsigned(d.month()), unsigned(d.day()),
                           int(d.year()), r.quantity, to_string(r.shipping_mode), r.actual_delivery_days,
                           r.unit_price);
    }
}

void to_json(nlohmann::json& j, const IngestReport& r) {
    j = nlohmann::json{{"rows_read", r.rows_read},
                       {"rows_accepted", r.rows_accepted},
                       {"rows_skipped", r.rows_skipped},
                       {"skip_reasons", r.skip_reasons}};
}

void to_json(nlohmann::json& j, const ModeStats& s) {
    j = nlohmann::json{{"mode", to_string(s.mode)},
                       {"mean_delivery_days", s.mean_delivery_days},
                       {"order_count", s.order_count},
                       {"volume_share", s.volume_share},
                       {"mean_unit_price", s.mean_unit_price}};
}

}  // namespace shipcast::ingest
