#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <istream>
#include <ostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "shipcast/date.hpp"
#include "shipcast/series.hpp"

namespace shipcast::ingest {

enum class ShippingModeLabel { FirstClass, SameDay, SecondClass, StandardClass };

inline constexpr std::array<ShippingModeLabel, 4> kAllModes = {
    ShippingModeLabel::FirstClass, ShippingModeLabel::SameDay, ShippingModeLabel::SecondClass,
    ShippingModeLabel::StandardClass};

/// "First Class", "Same Day", "Second Class", "Standard Class".
std::string_view to_string(ShippingModeLabel mode);
std::optional<ShippingModeLabel> parse_mode(std::string_view label);

struct TransactionRecord {
    Date order_date;
    std::int64_t quantity = 0;  // >= 1
    ShippingModeLabel shipping_mode = ShippingModeLabel::StandardClass;
    double actual_delivery_days = 0.0;  // >= 0
    double unit_price = 0.0;            // >= 0

    friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

/// Maps the five logical fields to CSV header names. Defaults are the DataCo headers.
struct ColumnSchema {
    std::string order_date = "order date (DateOrders)";
    std::string quantity = "Order Item Quantity";
    std::string shipping_mode = "Shipping Mode";
    std::string delivery_days = "Days for shipping (real)";
    std::string unit_price = "Product Price";
};

struct IngestReport {
    std::size_t rows_read = 0;
    std::size_t rows_accepted = 0;
    std::size_t rows_skipped = 0;
    std::map<std::string, std::size_t> skip_reasons;
};

struct ParseResult {
    std::vector<TransactionRecord> records;
    IngestReport report;
};

/// Reads a header-first CSV. Malformed rows are skipped and tallied by reason
/// (field_count, bad_date, bad_quantity, nonpositive_quantity, unknown_mode,
/// bad_delivery_days, negative_delivery_days, bad_unit_price, negative_unit_price,
/// empty_row). Throws DataError on an empty file or a missing mapped column.
ParseResult parse_transactions(std::istream& source, const ColumnSchema& schema = {});

struct AggregateOptions {
    std::chrono::weekday anchor = std::chrono::Monday;
    /// Weeks removed from the end after aggregation (incomplete trailing data).
    std::size_t drop_trailing_weeks = 0;
};

/// Sums quantities into anchor-aligned weeks from the first to the last
/// transaction; empty weeks are 0.
WeeklySeries aggregate_weekly(std::span<const TransactionRecord> records, const AggregateOptions& opts = {});

struct ModeStats {
    ShippingModeLabel mode = ShippingModeLabel::StandardClass;
    double mean_delivery_days = 0.0;
    std::size_t order_count = 0;
    double volume_share = 0.0;     // order_count / total records
    double mean_unit_price = 0.0;  // feeds the optional cost proxy
};

/// One entry per mode present, in kAllModes order.
std::vector<ModeStats> extract_mode_stats(std::span<const TransactionRecord> records);

/// round(volume_share * demand * headroom).
std::int64_t capacity_proxy(const ModeStats& stats, std::int64_t demand, double headroom);

/// First train_len weeks and the remainder. Requires 0 < train_len < series length.
std::pair<WeeklySeries, WeeklySeries> temporal_split(const WeeklySeries& series, std::size_t train_len);

/// Seeded stand-in for the DataCo log. Weekly totals follow make_synthetic();
/// each week is split into orders of 1-5 units spread over the 7 days.
struct SyntheticTransactionsSpec {
    SyntheticSpec weekly;
    /// Order shares in kAllModes order.
    std::array<double, 4> mode_share{0.154, 0.054, 0.195, 0.597};
    /// Delivery days, drawn uniformly from mean-1, mean, mean+1 (never below 0).
    std::array<int, 4> mean_days{2, 1, 3, 4};
    std::uint64_t seed = 0;
};

/// Defaults used for the checked-in dataset: 162 weeks from 2015-01-05 around
/// 480 units per week with periods 4 and 52.
SyntheticTransactionsSpec default_synthetic_transactions(std::uint64_t seed);

std::vector<TransactionRecord> synthesize_transactions(const SyntheticTransactionsSpec& spec);

/// Header-first CSV readable by parse_transactions() with the same schema.
/// Dates are written as "M/D/YYYY H:MM".
void write_transactions_csv(std::ostream& out, std::span<const TransactionRecord> records,
                            const ColumnSchema& schema = {});

void to_json(nlohmann::json& j, const IngestReport& r);
void to_json(nlohmann::json& j, const ModeStats& s);

}  // namespace shipcast::ingest
