#include "nftproj/wei.hpp"

#include <cctype>
#include <cmath>
#include <limits>

#include "nftproj/errors.hpp"

namespace nftproj {

namespace {

constexpr Wei kWeiMax = ~Wei(0);

bool all_digits(std::string_view s) {
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

Wei parse_digits(std::string_view s, std::string_view original) {
  Wei v = 0;
  for (char c : s) {
    Wei d = Wei(c - '0');
    if (v > (kWeiMax - d) / 10) {
      raise(Errc::parse_error, "ETH amount out of range: \"" + std::string(original) + "\"");
    }
    v = v * 10 + d;
  }
  return v;
}

}  // namespace

Wei parse_eth(std::string_view text) {
  if (text.empty()) raise(Errc::parse_error, "empty ETH amount");
  std::string_view int_part = text;
  std::string_view frac_part;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    int_part = text.substr(0, dot);
    frac_part = text.substr(dot + 1);
    if (frac_part.find('.') != std::string_view::npos) {
      raise(Errc::parse_error, "malformed ETH amount: \"" + std::string(text) + "\"");
    }
  }
  if (int_part.empty() || (frac_part.empty() && int_part.size() != text.size())) {
    raise(Errc::parse_error, "malformed ETH amount: \"" + std::string(text) + "\"");
  }
  if (!all_digits(int_part) || !all_digits(frac_part)) {
    raise(Errc::parse_error, "malformed ETH amount: \"" + std::string(text) + "\"");
  }
  if (frac_part.size() > 18) {
    raise(Errc::parse_error,
          "ETH amount has sub-wei precision: \"" + std::string(text) + "\"");
  }

  Wei whole = parse_digits(int_part, text);
  if (whole > kWeiMax / kWeiPerEth) {
    raise(Errc::parse_error, "ETH amount out of range: \"" + std::string(text) + "\"");
  }
  Wei w = whole * kWeiPerEth;

  Wei frac = parse_digits(frac_part, text);
  for (std::size_t i = frac_part.size(); i < 18; ++i) frac *= 10;
  if (w > kWeiMax - frac) {
    raise(Errc::parse_error, "ETH amount out of range: \"" + std::string(text) + "\"");
  }
  return w + frac;
}

std::string u128_to_string(Wei w) {
  if (w == 0) return "0";
  char buf[40];
  int pos = 40;
  while (w > 0) {
    buf[--pos] = char('0' + int(w % 10));
    w /= 10;
  }
  return std::string(buf + pos, buf + 40);
}

std::string format_eth(Wei w) {
  Wei whole = w / kWeiPerEth;
  Wei frac = w % kWeiPerEth;
  std::string out = u128_to_string(whole);
  if (frac != 0) {
    std::string digits = u128_to_string(frac);
    digits.insert(digits.begin(), 18 - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += '.';
    out += digits;
  }
  return out;
}

double to_eth(Wei w) noexcept {
  return static_cast<double>(w) / 1e18;
}

Wei wei_from_eth_micro(double eth) {
  if (!std::isfinite(eth)) raise(Errc::non_finite, "ETH amount is not finite");
  if (eth <= 0.0) return 0;
  long double micro = static_cast<long double>(eth) * static_cast<long double>(kMicroPerEth);
  if (micro >= 9.2e18L) raise(Errc::non_finite, "ETH amount overflows value grid");
  auto units = static_cast<std::uint64_t>(micro + 0.5L);
  return Wei(units) * kWeiPerMicroEth;
}

}  // namespace nftproj
