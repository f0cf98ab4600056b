#include "nftproj/series.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <unordered_map>

#include "nftproj/errors.hpp"

namespace nftproj {

DayRange quarter_range(QuarterId q) noexcept {
  switch (q) {
    case QuarterId::q1: return {0, 91};
    case QuarterId::q2: return {91, 91};
    case QuarterId::q3: return {182, 91};
    case QuarterId::q4: return {273, 92};
  }
  return {0, 0};
}

const char* quarter_name(QuarterId q) noexcept {
  switch (q) {
    case QuarterId::q1: return "q1";
    case QuarterId::q2: return "q2";
    case QuarterId::q3: return "q3";
    case QuarterId::q4: return "q4";
  }
  return "?";
}

CollectionSeries build_series(const std::string& collection_id,
                              std::vector<SaleEvent> events,
                              std::int64_t inception_ts,
                              const std::vector<std::uint64_t>& token_ids,
                              std::size_t* dropped_after_window) {
  std::unordered_map<std::uint64_t, std::size_t> slot;
  slot.reserve(token_ids.size());
  CollectionSeries cs;
  cs.collection_id = collection_id;
  cs.inception_ts = inception_ts;
  cs.tokens.resize(token_ids.size());
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    cs.tokens[i].token_id = token_ids[i];
    cs.tokens[i].points.assign(kYearDays, DailyPoint{});
    slot.emplace(token_ids[i], i);
  }

  std::sort(events.begin(), events.end(), [](const SaleEvent& a, const SaleEvent& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.seq < b.seq;
  });

  std::size_t dropped = 0;
  for (const SaleEvent& ev : events) {
    if (ev.timestamp < inception_ts) {
      raise(Errc::parse_error,
            "event before collection inception (token " + std::to_string(ev.token_id) + ")");
    }
    auto it = slot.find(ev.token_id);
    if (it == slot.end()) {
      raise(Errc::unknown_token,
            "event references token " + std::to_string(ev.token_id) +
                " outside the collection's token set");
    }
    std::int64_t day = (ev.timestamp - inception_ts) / 86400;
    if (day >= kYearDays) {
      ++dropped;
      continue;
    }
    auto& points = cs.tokens[it->second].points;
    // Events arrive time-sorted, so this sale is the latest seen for its day.
    points[std::size_t(day)].value = ev.price_wei;
    points[std::size_t(day)].count += 1;
  }
  if (dropped_after_window) *dropped_after_window = dropped;

  // Per-day tallies become carried values and cumulative counts.
  for (TokenSeries& ts : cs.tokens) {
    Wei value = 0;
    std::uint32_t total = 0;
    for (DailyPoint& p : ts.points) {
      if (p.count > 0) value = p.value;
      total += p.count;
      p.value = value;
      p.count = total;
    }
  }
  return cs;
}

CollectionSeries slice_quarter(const CollectionSeries& cs, QuarterId q) {
  DayRange r = quarter_range(q);
  CollectionSeries out;
  out.collection_id = cs.collection_id;
  out.inception_ts = cs.inception_ts;
  out.tokens.reserve(cs.tokens.size());
  for (const TokenSeries& ts : cs.tokens) {
    if (ts.start_day != 0 || ts.points.size() != kYearDays) {
      raise(Errc::shape_mismatch, "slice_quarter requires a full 365-day frame");
    }
    TokenSeries sub;
    sub.token_id = ts.token_id;
    sub.start_day = r.first;
    sub.points.assign(ts.points.begin() + r.first, ts.points.begin() + r.first + r.length);
    out.tokens.push_back(std::move(sub));
  }
  return out;
}

std::map<std::uint32_t, std::size_t> tx_count_histogram(const CollectionSeries& cs,
                                                        std::uint32_t horizon_days) {
  if (horizon_days < 1 || horizon_days > kYearDays) {
    raise(Errc::invalid_spec, "histogram horizon must be in [1, 365]");
  }
  std::map<std::uint32_t, std::size_t> hist;
  for (const TokenSeries& ts : cs.tokens) {
    if (ts.points.size() < horizon_days) {
      raise(Errc::shape_mismatch, "token series shorter than histogram horizon");
    }
    hist[ts.points[horizon_days - 1].count] += 1;
  }
  return hist;
}

void validate_series(const CollectionSeries& cs, bool full_frame) {
  for (const TokenSeries& ts : cs.tokens) {
    if (full_frame && (ts.start_day != 0 || ts.points.size() != kYearDays)) {
      raise(Errc::shape_mismatch,
            "token " + std::to_string(ts.token_id) + " does not cover the 365-day frame");
    }
    std::uint32_t prev_count = 0;
    Wei prev_value = 0;
    bool first = true;
    for (const DailyPoint& p : ts.points) {
      if (p.count == 0 && p.value != 0) {
        raise(Errc::shape_mismatch,
              "token " + std::to_string(ts.token_id) + " has a value before any sale");
      }
      if (!first) {
        if (p.count < prev_count) {
          raise(Errc::shape_mismatch,
                "token " + std::to_string(ts.token_id) + " has a decreasing count");
        }
        if (p.count == prev_count && p.value != prev_value) {
          raise(Errc::shape_mismatch,
                "token " + std::to_string(ts.token_id) + " changes value without a sale");
        }
      }
      prev_count = p.count;
      prev_value = p.value;
      first = false;
    }
  }
}

void write_series_csv(const CollectionSeries& cs, std::ostream& out) {
  out << "token_id,day,value_eth,count\n";
  for (const TokenSeries& ts : cs.tokens) {
    for (std::size_t i = 0; i < ts.points.size(); ++i) {
      out << ts.token_id << ',' << (ts.start_day + i) << ','
          << format_eth(ts.points[i].value) << ',' << ts.points[i].count << '\n';
    }
  }
}

void write_series_csv(const CollectionSeries& cs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_error, "cannot open for writing: " + path);
  write_series_csv(cs, out);
  if (!out) raise(Errc::io_error, "write failed: " + path);
}

CollectionSeries read_series_csv(std::istream& in, const std::string& origin,
                                 const std::string& collection_id,
                                 std::int64_t inception_ts) {
  CollectionSeries cs;
  cs.collection_id = collection_id;
  cs.inception_ts = inception_ts;
  std::unordered_map<std::uint64_t, std::size_t> slot;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "token_id,day,value_eth,count") continue;

    std::array<std::string, 4> field;
    std::size_t n = 0, start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (n >= 4) raise(Errc::parse_error, origin + ":" + std::to_string(line_no) + ": too many fields");
        field[n++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (n != 4) raise(Errc::parse_error, origin + ":" + std::to_string(line_no) + ": expected 4 fields");

    auto parse_u64 = [&](const std::string& s) -> std::uint64_t {
      if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        raise(Errc::parse_error,
              origin + ":" + std::to_string(line_no) + ": malformed integer \"" + s + "\"");
      }
      try {
        return std::stoull(s);
      } catch (const std::exception&) {
        raise(Errc::parse_error,
              origin + ":" + std::to_string(line_no) + ": integer out of range \"" + s + "\"");
      }
    };
    std::uint64_t token_id = parse_u64(field[0]);
    std::uint64_t day = parse_u64(field[1]);
    std::uint64_t count = parse_u64(field[3]);
    Wei value;
    try {
      value = parse_eth(field[2]);
    } catch (const Error& e) {
      raise(Errc::parse_error, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }

    auto [it, inserted] = slot.emplace(token_id, cs.tokens.size());
    if (inserted) {
      TokenSeries ts;
      ts.token_id = token_id;
      ts.start_day = std::uint32_t(day);
      cs.tokens.push_back(std::move(ts));
    }
    TokenSeries& ts = cs.tokens[it->second];
    if (day != ts.start_day + ts.points.size()) {
      raise(Errc::parse_error, origin + ":" + std::to_string(line_no) +
                                   ": days of token " + field[0] + " are not contiguous");
    }
    ts.points.push_back(DailyPoint{value, std::uint32_t(count)});
  }
  return cs;
}

CollectionSeries read_series_csv(const std::string& path, const std::string& collection_id,
                                 std::int64_t inception_ts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open: " + path);
  return read_series_csv(in, path, collection_id, inception_ts);
}

}  // namespace nftproj
