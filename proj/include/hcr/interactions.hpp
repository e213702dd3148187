#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "hcr/common.hpp"

namespace hcr {

/// One logged impression: click label plus the post-click like label.
/// Invariant: like implies click.
struct Interaction {
    UserId user = 0;
    ItemId item = 0;
    std::int64_t timestamp = 0;
    bool click = false;
    bool like = false;

    friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// The observational dataset: interactions sorted by timestamp, ids dense.
struct InteractionLog {
    std::vector<Interaction> interactions;
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;

    friend bool operator==(const InteractionLog&, const InteractionLog&) = default;
};

/// Result of ingesting a CSV log. Ids are re-indexed to dense ranges;
/// user_ids / item_ids map each dense index back to the id found in the file
/// (identity when the file was already dense). Rows violating like<=click are
/// dropped and counted rather than clamped so data bugs surface early.
struct ParseResult {
    InteractionLog log;
    std::vector<std::int64_t> user_ids;
    std::vector<std::int64_t> item_ids;
    std::size_t rejected_rows = 0;
};

namespace detail {

inline std::int64_t parse_int_field(const std::string& field, std::size_t line_no, const char* what) {
    std::size_t pos = 0;
    std::int64_t value = 0;
    try {
        value = std::stoll(field, &pos);
    } catch (const std::exception&) {
        throw InvalidInput("line " + std::to_string(line_no) + ": malformed " + what + " '" + field + "'");
    }
    if (pos != field.size()) {
        throw InvalidInput("line " + std::to_string(line_no) + ": malformed " + what + " '" + field + "'");
    }
    return value;
}

}  // namespace detail

/// Parses the CSV interaction format: user_id,item_id,timestamp,click,like.
/// An optional single header line starting with "user_id" is skipped.
/// Rows are sorted by timestamp (stable, so file order breaks ties) and ids
/// are remapped to dense indices by ascending original id.
inline ParseResult parse_interaction_log(std::istream& in) {
    struct RawRow {
        std::int64_t user, item, timestamp;
        bool click, like;
    };
    std::vector<RawRow> rows;
    std::size_t rejected = 0;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("user_id", 0) == 0) continue;

        std::array<std::string, 5> fields;
        std::size_t field_count = 0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (field_count >= 5) {
                    throw InvalidInput("line " + std::to_string(line_no) + ": expected 5 fields");
                }
                fields[field_count++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (field_count != 5) {
            throw InvalidInput("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                               std::to_string(field_count));
        }

        RawRow row{};
        row.user = detail::parse_int_field(fields[0], line_no, "user_id");
        row.item = detail::parse_int_field(fields[1], line_no, "item_id");
        row.timestamp = detail::parse_int_field(fields[2], line_no, "timestamp");
        const std::int64_t click = detail::parse_int_field(fields[3], line_no, "click");
        const std::int64_t like = detail::parse_int_field(fields[4], line_no, "like");
        if (row.user < 0 || row.item < 0 || row.timestamp < 0) {
            throw InvalidInput("line " + std::to_string(line_no) + ": negative id or timestamp");
        }
        if ((click != 0 && click != 1) || (like != 0 && like != 1)) {
            throw InvalidInput("line " + std::to_string(line_no) + ": click/like must be 0 or 1");
        }
        row.click = click == 1;
        row.like = like == 1;
        if (row.like && !row.click) {
            ++rejected;  // like without click violates the data model
            continue;
        }
        rows.push_back(row);
    }

    // Dense re-indexing by ascending original id keeps parse(serialize(log))
    // the identity on already-normalized logs.
    std::map<std::int64_t, UserId> user_index;
    std::map<std::int64_t, ItemId> item_index;
    for (const RawRow& r : rows) {
        user_index.emplace(r.user, 0);
        item_index.emplace(r.item, 0);
    }
    ParseResult result;
    for (auto& [orig, dense] : user_index) {
        dense = static_cast<UserId>(result.user_ids.size());
        result.user_ids.push_back(orig);
    }
    for (auto& [orig, dense] : item_index) {
        dense = static_cast<ItemId>(result.item_ids.size());
        result.item_ids.push_back(orig);
    }

    result.log.num_users = static_cast<std::uint32_t>(result.user_ids.size());
    result.log.num_items = static_cast<std::uint32_t>(result.item_ids.size());
    result.log.interactions.reserve(rows.size());
    for (const RawRow& r : rows) {
        result.log.interactions.push_back(Interaction{user_index.at(r.user), item_index.at(r.item),
                                                      r.timestamp, r.click, r.like});
    }
    std::stable_sort(result.log.interactions.begin(), result.log.interactions.end(),
                     [](const Interaction& a, const Interaction& b) { return a.timestamp < b.timestamp; });
    result.rejected_rows = rejected;
    return result;
}

inline ParseResult parse_interaction_log(const std::string& text) {
    std::istringstream in(text);
    return parse_interaction_log(in);
}

inline void serialize_interaction_log(const InteractionLog& log, std::ostream& out) {
    out << "user_id,item_id,timestamp,click,like\n";
    for (const Interaction& r : log.interactions) {
        out << r.user << ',' << r.item << ',' << r.timestamp << ',' << (r.click ? 1 : 0) << ','
            << (r.like ? 1 : 0) << '\n';
    }
}

inline std::string serialize_interaction_log(const InteractionLog& log) {
    std::ostringstream out;
    serialize_interaction_log(log, out);
    return out.str();
}

/// Train prefix plus per-user held-out liked items. validation[u] and test[u]
/// are deduplicated item lists in chronological (like-time) order.
struct DatasetSplit {
    InteractionLog train;
    std::vector<std::vector<ItemId>> validation;
    std::vector<std::vector<ItemId>> test;

    /// Items of u's train interactions (any label); these are never ranked.
    std::vector<std::vector<ItemId>> train_items;
};

/// Chronological split: earliest floor(train_fraction * N) records form the
/// train log; each user's liked items that never occur in their train
/// interactions are ordered by first like time and halved, earlier half to
/// validation (the extra one on odd counts), later half to test.
inline DatasetSplit chronological_split(const InteractionLog& log, double train_fraction = 0.7) {
    if (log.interactions.empty()) throw InvalidInput("chronological_split: empty log");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidInput("chronological_split: train_fraction must be in (0,1)");
    }
    const std::size_t n_train =
        static_cast<std::size_t>(train_fraction * static_cast<double>(log.interactions.size()));

    DatasetSplit split;
    split.train.num_users = log.num_users;
    split.train.num_items = log.num_items;
    split.train.interactions.assign(log.interactions.begin(),
                                    log.interactions.begin() + static_cast<std::ptrdiff_t>(n_train));

    std::vector<std::unordered_set<ItemId>> in_train(log.num_users);
    for (const Interaction& r : split.train.interactions) in_train[r.user].insert(r.item);

    // First like time per (user,item) over the whole log, items in train excluded.
    std::vector<std::map<ItemId, std::int64_t>> first_like(log.num_users);
    for (const Interaction& r : log.interactions) {
        if (!r.like || in_train[r.user].count(r.item)) continue;
        auto [it, inserted] = first_like[r.user].emplace(r.item, r.timestamp);
        if (!inserted && r.timestamp < it->second) it->second = r.timestamp;
    }

    split.validation.resize(log.num_users);
    split.test.resize(log.num_users);
    split.train_items.resize(log.num_users);
    for (UserId u = 0; u < log.num_users; ++u) {
        std::vector<std::pair<std::int64_t, ItemId>> liked;
        liked.reserve(first_like[u].size());
        for (const auto& [item, ts] : first_like[u]) liked.emplace_back(ts, item);
        std::sort(liked.begin(), liked.end());

        const std::size_t n_val = (liked.size() + 1) / 2;  // odd count: extra item to validation
        for (std::size_t k = 0; k < liked.size(); ++k) {
            (k < n_val ? split.validation[u] : split.test[u]).push_back(liked[k].second);
        }
        split.train_items[u].assign(in_train[u].begin(), in_train[u].end());
        std::sort(split.train_items[u].begin(), split.train_items[u].end());
    }
    return split;
}

}  // namespace hcr
