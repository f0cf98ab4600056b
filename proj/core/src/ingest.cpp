#include "nftproj/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "nftproj/errors.hpp"

namespace nftproj {

namespace {

constexpr const char* kEventsHeader = "collection_id,token_id,timestamp,price_eth";

std::uint64_t parse_u64_strict(const std::string& s, const std::string& where) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    raise(Errc::parse_error, where + ": malformed non-negative integer \"" + s + "\"");
  }
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    raise(Errc::parse_error, where + ": integer out of range \"" + s + "\"");
  }
  return v;
}

std::int64_t parse_timestamp(const std::string& s, const std::string& where) {
  auto v = parse_u64_strict(s, where);
  if (v == 0 || v > std::uint64_t(INT64_MAX)) {
    raise(Errc::parse_error, where + ": timestamp must be a positive unix time");
  }
  return std::int64_t(v);
}

std::string double_to_decimal(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

void sort_and_sequence(std::vector<SaleEvent>& events) {
  for (std::size_t i = 0; i < events.size(); ++i) events[i].seq = i;
  std::sort(events.begin(), events.end(), [](const SaleEvent& a, const SaleEvent& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.seq < b.seq;  // seq currently holds source order
  });
  for (std::size_t i = 0; i < events.size(); ++i) events[i].seq = i;
}

std::vector<SaleEvent> parse_events_csv(std::istream& in, const std::string& origin) {
  std::vector<SaleEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == kEventsHeader) continue;
    std::string where = origin + ":" + std::to_string(line_no);

    std::array<std::string, 4> field;
    std::size_t n = 0, start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (n >= 4) raise(Errc::parse_error, where + ": too many fields");
        field[n++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (n != 4) raise(Errc::parse_error, where + ": expected 4 fields, got " + std::to_string(n));
    if (field[0].empty()) raise(Errc::parse_error, where + ": empty collection_id");

    SaleEvent ev;
    ev.collection_id = field[0];
    ev.token_id = parse_u64_strict(field[1], where);
    ev.timestamp = parse_timestamp(field[2], where);
    try {
      ev.price_wei = parse_eth(field[3]);
    } catch (const Error& e) {
      raise(Errc::parse_error, where + ": " + e.what());
    }
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<SaleEvent> parse_events_jsonl(std::istream& in, const std::string& origin) {
  std::vector<SaleEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string where = origin + ":" + std::to_string(line_no);

    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      raise(Errc::parse_error, where + ": malformed JSON object");
    }
    if (j.contains("type")) {
      if (!j["type"].is_string() || j["type"].get<std::string>() != "sale") {
        raise(Errc::non_sale_event, where + ": only sale events are ingested");
      }
    }

    auto field_string = [&](const char* key) -> std::string {
      if (!j.contains(key)) raise(Errc::parse_error, where + ": missing key \"" + key + "\"");
      const auto& v = j[key];
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
      if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
      if (v.is_number_float()) return double_to_decimal(v.get<double>());
      raise(Errc::parse_error, where + ": key \"" + key + "\" has an unsupported type");
    };

    SaleEvent ev;
    ev.collection_id = field_string("collection_id");
    if (ev.collection_id.empty()) raise(Errc::parse_error, where + ": empty collection_id");
    ev.token_id = parse_u64_strict(field_string("token_id"), where);
    ev.timestamp = parse_timestamp(field_string("timestamp"), where);
    try {
      ev.price_wei = parse_eth(field_string("price_eth"));
    } catch (const Error& e) {
      if (e.code() == Errc::parse_error) raise(Errc::parse_error, where + ": " + e.what());
      throw;
    }
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<SaleEvent> load_events(const std::string& path, EventFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open: " + path);
  auto events = format == EventFormat::csv ? parse_events_csv(in, path)
                                           : parse_events_jsonl(in, path);
  sort_and_sequence(events);
  return events;
}

void write_events_csv(const std::vector<SaleEvent>& events, std::ostream& out) {
  out << kEventsHeader << '\n';
  for (const SaleEvent& ev : events) {
    out << ev.collection_id << ',' << ev.token_id << ',' << ev.timestamp << ','
        << format_eth(ev.price_wei) << '\n';
  }
}

void write_events_csv(const std::vector<SaleEvent>& events, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_error, "cannot open for writing: " + path);
  write_events_csv(events, out);
  if (!out) raise(Errc::io_error, "write failed: " + path);
}

void write_events_jsonl(const std::vector<SaleEvent>& events, std::ostream& out) {
  for (const SaleEvent& ev : events) {
    nlohmann::json j{
        {"collection_id", ev.collection_id},
        {"token_id", ev.token_id},
        {"timestamp", ev.timestamp},
        {"price_eth", format_eth(ev.price_wei)},
        {"type", "sale"},
    };
    out << j.dump() << '\n';
  }
}

}  // namespace nftproj
