#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nftproj/wei.hpp"

namespace nftproj {

/// One confirmed sale. `seq` disambiguates sales sharing a timestamp and is
/// assigned during ingestion in source order, so (collection_id, token_id,
/// timestamp, seq) is unique within a loaded batch.
struct SaleEvent {
  std::string collection_id;
  std::uint64_t token_id = 0;
  std::int64_t timestamp = 0;  // unix seconds
  Wei price_wei = 0;
  std::uint64_t seq = 0;

  friend bool operator==(const SaleEvent&, const SaleEvent&) = default;
};

enum class EventFormat { csv, jsonl };

/// Sorts by (timestamp, then original position) and rewrites seq to the
/// position within the sorted batch. Events at equal timestamps keep their
/// relative source order.
void sort_and_sequence(std::vector<SaleEvent>& events);

/// Reads sale events from a CSV (header `collection_id,token_id,timestamp,
/// price_eth`) or JSONL file. JSONL records may carry a "type" field; any
/// value other than "sale" raises NonSaleEvent with the line number.
/// The result is sorted and sequenced.
std::vector<SaleEvent> load_events(const std::string& path, EventFormat format);

std::vector<SaleEvent> parse_events_csv(std::istream& in, const std::string& origin);
std::vector<SaleEvent> parse_events_jsonl(std::istream& in, const std::string& origin);

void write_events_csv(const std::vector<SaleEvent>& events, std::ostream& out);
void write_events_csv(const std::vector<SaleEvent>& events, const std::string& path);
void write_events_jsonl(const std::vector<SaleEvent>& events, std::ostream& out);

struct FetchConfig {
  std::string base_url;          // e.g. http://127.0.0.1:8080
  std::string path = "/api";
  std::string api_key;           // empty: read NFTPROJ_API_KEY from the environment
  int page_size = 100;
  int max_retries = 3;
  int backoff_ms = 100;          // doubled after every retried attempt
};

/// Pulls the full sale history of a collection from an Etherscan-style
/// paginated JSON endpoint (module=account&action=tokennfttx). Pages are
/// requested until one comes back empty. Responses with status 429 or 5xx
/// are retried with exponential backoff; anything else unexpected raises
/// HttpError. The result is sorted and sequenced.
std::vector<SaleEvent> fetch_events(const FetchConfig& config,
                                    const std::string& contract_address,
                                    std::int64_t start_block = 0,
                                    std::int64_t end_block = 99999999);

}  // namespace nftproj
