#include <doctest.h>

#include <atomic>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <nftproj/errors.hpp>
#include <nftproj/ingest.hpp>
#include <nftproj/wei.hpp>

#include "test_util.hpp"

using namespace nftproj;

namespace {

SaleEvent ev(std::string coll, std::uint64_t token, std::int64_t ts, const std::string& eth,
             std::uint64_t seq = 0) {
  return SaleEvent{std::move(coll), token, ts, parse_eth(eth), seq};
}

// Serves canned pages and counts requests; pages beyond the scripted ones are empty.
class MockApi {
 public:
  explicit MockApi(std::vector<std::string> pages, int deny_429 = 0)
      : pages_(std::move(pages)), deny_429_(deny_429) {
    server_.Get("/api", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      last_params_ = req.params;
      if (deny_429_ > 0) {
        --deny_429_;
        res.status = 429;
        return;
      }
      std::size_t page = std::stoul(req.get_param_value("page"));
      REQUIRE(page >= 1);
      if (page - 1 < pages_.size()) {
        res.set_content(pages_[page - 1], "application/json");
      } else {
        res.set_content(R"({"status":"1","result":[]})", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockApi() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }
  httplib::Params last_params() const { return last_params_; }

 private:
  httplib::Server server_;
  std::vector<std::string> pages_;
  std::atomic<int> deny_429_;
  std::atomic<int> requests_{0};
  httplib::Params last_params_;
  int port_ = 0;
  std::thread thread_;
};

std::string sale_row(const std::string& coll, std::uint64_t token, std::int64_t ts,
                     const std::string& eth) {
  nlohmann::json j{{"type", "sale"},
                   {"collection_id", coll},
                   {"token_id", std::to_string(token)},
                   {"timestamp", std::to_string(ts)},
                   {"price_eth", eth}};
  return j.dump();
}

std::string page_of(const std::vector<std::string>& rows) {
  std::string body = R"({"status":"1","message":"OK","result":[)";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) body += ",";
    body += rows[i];
  }
  body += "]}";
  return body;
}

}  // namespace

TEST_CASE("csv parses one row into exact fields") {
  std::istringstream in(
      "collection_id,token_id,timestamp,price_eth\n"
      "bayc,42,1609459300,2.5\n");
  auto events = parse_events_csv(in, "test.csv");
  REQUIRE(events.size() == 1);
  CHECK(events[0].collection_id == "bayc");
  CHECK(events[0].token_id == 42);
  CHECK(events[0].timestamp == 1609459300);
  CHECK(events[0].price_wei == parse_eth("2.5"));
}

TEST_CASE("csv rejects malformed rows with the origin in the message") {
  auto rejects = [](const std::string& body) {
    std::istringstream in("collection_id,token_id,timestamp,price_eth\n" + body);
    try {
      parse_events_csv(in, "bad.csv");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::parse_error);
      CHECK(std::string(e.what()).find("bad.csv") != std::string::npos);
    }
  };
  rejects("bayc,42,1609459300\n");
  rejects("bayc,42,1609459300,notaprice\n");
  rejects("bayc,notanumber,1609459300,1\n");
  rejects(",42,1609459300,1\n");
}

TEST_CASE("csv rejects a wrong header") {
  std::istringstream in("a,b,c,d\nbayc,42,1609459300,2.5\n");
  CHECK_THROWS_AS(parse_events_csv(in, "hdr.csv"), Error);
}

TEST_CASE("jsonl parses sale events and rejects other types") {
  std::istringstream in(
      R"({"type":"sale","collection_id":"x","token_id":7,"timestamp":1609459300,"price_eth":"1.5"})"
      "\n");
  auto events = parse_events_jsonl(in, "test.jsonl");
  REQUIRE(events.size() == 1);
  CHECK(events[0].token_id == 7);
  CHECK(events[0].price_wei == parse_eth("1.5"));

  std::istringstream bad(
      R"({"type":"transfer","collection_id":"x","token_id":7,"timestamp":1609459300,"price_eth":"1.5"})"
      "\n");
  try {
    parse_events_jsonl(bad, "bad.jsonl");
    FAIL("expected non_sale_event");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_sale_event);
  }
}

TEST_CASE("sort_and_sequence orders by timestamp and rewrites seq stably") {
  std::vector<SaleEvent> events{
      ev("c", 1, 200, "1"),
      ev("c", 2, 100, "2"),
      ev("c", 3, 200, "3"),
      ev("c", 4, 100, "4"),
  };
  sort_and_sequence(events);
  REQUIRE(events.size() == 4);
  CHECK(events[0].token_id == 2);
  CHECK(events[1].token_id == 4);
  CHECK(events[2].token_id == 1);
  CHECK(events[3].token_id == 3);
  for (std::uint64_t i = 0; i < 4; ++i) CHECK(events[i].seq == i);
}

TEST_CASE("csv write/parse round-trip is exact") {
  std::vector<SaleEvent> events{
      ev("alpha", 1, 1609459300, "1.000000000000000001"),
      ev("alpha", 2, 1609459400, "0.000000000000000001"),
      ev("alpha", 3, 1609459500, "123456.789"),
  };
  sort_and_sequence(events);
  std::ostringstream out;
  write_events_csv(events, out);
  std::istringstream in(out.str());
  auto parsed = parse_events_csv(in, "rt.csv");
  sort_and_sequence(parsed);
  CHECK(parsed == events);
}

TEST_CASE("jsonl write/parse round-trip is exact") {
  std::vector<SaleEvent> events{
      ev("alpha", 1, 1609459300, "2.5"),
      ev("alpha", 9, 1609459400, "0.25"),
  };
  sort_and_sequence(events);
  std::ostringstream out;
  write_events_jsonl(events, out);
  std::istringstream in(out.str());
  auto parsed = parse_events_jsonl(in, "rt.jsonl");
  sort_and_sequence(parsed);
  CHECK(parsed == events);
}

TEST_CASE("load_events reads both formats from disk") {
  testutil::TempDir dir;
  std::vector<SaleEvent> events{ev("c", 1, 1609459300, "1"), ev("c", 2, 1609459400, "2")};
  sort_and_sequence(events);
  write_events_csv(events, dir.file("e.csv"));
  auto from_csv = load_events(dir.file("e.csv"), EventFormat::csv);
  CHECK(from_csv == events);
  CHECK_THROWS_AS(load_events(dir.file("missing.csv"), EventFormat::csv), Error);
}

TEST_CASE("fetch paginates until the first empty page") {
  MockApi api({page_of({sale_row("c", 1, 1609459400, "2")}),
               page_of({sale_row("c", 2, 1609459300, "3.5")})});
  FetchConfig config;
  config.base_url = api.base_url();
  config.page_size = 1;
  auto events = fetch_events(config, "0xabc");
  REQUIRE(events.size() == 2);
  // Three requests: two full pages plus the terminating empty one.
  CHECK(api.requests() == 3);
  // Sorted by timestamp with fresh seq, regardless of page order.
  CHECK(events[0].token_id == 2);
  CHECK(events[0].seq == 0);
  CHECK(events[1].token_id == 1);
  CHECK(events[1].seq == 1);
  CHECK(events[1].price_wei == parse_eth("2"));

  auto params = api.last_params();
  CHECK(params.find("module")->second == "account");
  CHECK(params.find("action")->second == "tokennfttx");
  CHECK(params.find("contractaddress")->second == "0xabc");
  CHECK(params.find("offset")->second == "1");
}

TEST_CASE("fetch retries 429 with backoff and then succeeds") {
  MockApi api({page_of({sale_row("c", 5, 1609459300, "1")})}, 2);
  FetchConfig config;
  config.base_url = api.base_url();
  config.page_size = 10;
  config.max_retries = 3;
  config.backoff_ms = 1;
  auto events = fetch_events(config, "0xabc");
  REQUIRE(events.size() == 1);
  CHECK(events[0].token_id == 5);
  // Two 429s, the successful page 1, and the empty page 2.
  CHECK(api.requests() == 4);
}

TEST_CASE("fetch gives up after max_retries exhausted") {
  MockApi api({page_of({sale_row("c", 5, 1609459300, "1")})}, 100);
  FetchConfig config;
  config.base_url = api.base_url();
  config.max_retries = 2;
  config.backoff_ms = 1;
  try {
    fetch_events(config, "0xabc");
    FAIL("expected http_error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::http_error);
  }
}

TEST_CASE("fetch with an empty first page issues exactly one request") {
  MockApi api({});
  FetchConfig config;
  config.base_url = api.base_url();
  auto events = fetch_events(config, "0xabc");
  CHECK(events.empty());
  CHECK(api.requests() == 1);
}

TEST_CASE("fetch rejects a response without a result array") {
  MockApi api({R"({"status":"1","message":"OK"})"});
  FetchConfig config;
  config.base_url = api.base_url();
  try {
    fetch_events(config, "0xabc");
    FAIL("expected schema_error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::schema_error);
  }
}
