#include <charconv>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "nftproj/errors.hpp"
#include "nftproj/ingest.hpp"

namespace nftproj {

namespace {

std::string double_to_decimal(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string json_string(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) raise(Errc::schema_error, where + ": missing key \"" + key + "\"");
  const auto& v = j[key];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return double_to_decimal(v.get<double>());
  raise(Errc::schema_error, where + ": key \"" + key + "\" has an unsupported type");
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    raise(Errc::schema_error, where + ": malformed integer \"" + s + "\"");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    raise(Errc::schema_error, where + ": integer out of range \"" + s + "\"");
  }
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

std::vector<SaleEvent> fetch_events(const FetchConfig& config,
                                    const std::string& contract_address,
                                    std::int64_t start_block,
                                    std::int64_t end_block) {
  if (config.page_size < 1) raise(Errc::config_error, "page_size must be >= 1");
  if (start_block > end_block) raise(Errc::config_error, "from_block exceeds to_block");

  std::string api_key = config.api_key;
  if (api_key.empty()) {
    if (const char* env = std::getenv("NFTPROJ_API_KEY")) api_key = env;
  }

  httplib::Client client(config.base_url);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(30, 0);

  std::vector<SaleEvent> events;
  for (int page = 1;; ++page) {
    httplib::Params params{
        {"module", "account"},
        {"action", "tokennfttx"},
        {"contractaddress", contract_address},
        {"startblock", std::to_string(start_block)},
        {"endblock", std::to_string(end_block)},
        {"page", std::to_string(page)},
        {"offset", std::to_string(config.page_size)},
        {"apikey", api_key},
    };

    httplib::Result res;
    int backoff = config.backoff_ms;
    for (int attempt = 0;; ++attempt) {
      res = client.Get(config.path, params, httplib::Headers{});
      bool transient = !res || retryable_status(res->status);
      if (!transient) break;
      if (attempt >= config.max_retries) {
        std::string reason = res ? "status " + std::to_string(res->status)
                                 : "connection error (" + httplib::to_string(res.error()) + ")";
        raise(Errc::http_error, "page " + std::to_string(page) + " failed after " +
                                    std::to_string(attempt + 1) + " attempts: " + reason);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
    if (res->status != 200) {
      raise(Errc::http_error,
            "page " + std::to_string(page) + ": unexpected status " + std::to_string(res->status));
    }

    std::string where = "page " + std::to_string(page);
    nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      raise(Errc::schema_error, where + ": response is not a JSON object");
    }
    if (!body.contains("result") || !body["result"].is_array()) {
      raise(Errc::schema_error, where + ": missing \"result\" array");
    }
    const auto& rows = body["result"];
    if (rows.empty()) break;

    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = rows[i];
      std::string row_where = where + " row " + std::to_string(i);
      if (!row.is_object()) raise(Errc::schema_error, row_where + ": row is not an object");
      if (row.contains("type")) {
        std::string type = json_string(row, "type", row_where);
        if (type != "sale") {
          raise(Errc::non_sale_event, row_where + ": only sale events are ingested");
        }
      }
      SaleEvent ev;
      ev.collection_id = row.contains("collection_id")
                             ? json_string(row, "collection_id", row_where)
                             : contract_address;
      ev.token_id = parse_u64(json_string(row, "token_id", row_where), row_where);
      std::uint64_t ts = parse_u64(json_string(row, "timestamp", row_where), row_where);
      if (ts == 0) raise(Errc::schema_error, row_where + ": timestamp must be positive");
      ev.timestamp = std::int64_t(ts);
      try {
        ev.price_wei = parse_eth(json_string(row, "price_eth", row_where));
      } catch (const Error& e) {
        if (e.code() == Errc::parse_error) raise(Errc::schema_error, row_where + ": " + e.what());
        throw;
      }
      events.push_back(std::move(ev));
    }
  }

  sort_and_sequence(events);
  return events;
}

}  // namespace nftproj
