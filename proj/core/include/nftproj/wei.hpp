#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace nftproj {

/// Prices are carried as integer wei. Collection-level sums reach beyond
/// 2^64 (a single sale can exceed 10^21 wei), hence the 128-bit type.
using Wei = unsigned __int128;

inline constexpr Wei kWeiPerEth = Wei(1000000000ULL) * Wei(1000000000ULL);
inline constexpr std::uint64_t kMicroPerEth = 1000000ULL;
inline constexpr Wei kWeiPerMicroEth = kWeiPerEth / kMicroPerEth;

/// Parses a non-negative decimal ETH amount ("2", "0.75", "1.000000000000000001")
/// into exact wei. At most 18 fractional digits; no sign, no exponent.
/// Throws ParseError on malformed input.
Wei parse_eth(std::string_view text);

/// Exact decimal ETH rendering of a wei amount, trailing zeros trimmed,
/// no decimal point when the amount is whole. Inverse of parse_eth.
std::string format_eth(Wei w);

std::string u128_to_string(Wei w);

/// Lossy conversion for analytics; wei above 2^53 lose low bits.
double to_eth(Wei w) noexcept;

/// Quantizes a generated (floating) ETH amount to the micro-ETH grid used
/// for synthesized values. Negative inputs map to zero. Round-trips exactly
/// through to_eth for amounts below ~10^9 ETH. Throws NonFinite when the
/// input is not finite or overflows the grid.
Wei wei_from_eth_micro(double eth);

}  // namespace nftproj
