#include "nftproj/errors.hpp"

namespace nftproj {

const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::parse_error: return "ParseError";
    case Errc::io_error: return "IoError";
    case Errc::http_error: return "HttpError";
    case Errc::schema_error: return "SchemaError";
    case Errc::non_sale_event: return "NonSaleEvent";
    case Errc::unknown_token: return "UnknownToken";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::rank_deficient: return "RankDeficient";
    case Errc::empty_collection: return "EmptyCollection";
    case Errc::degenerate_range: return "DegenerateRange";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::non_finite: return "NonFinite";
    case Errc::series_too_short: return "SeriesTooShort";
    case Errc::corrupt_checkpoint: return "CorruptCheckpoint";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::token_set_mismatch: return "TokenSetMismatch";
    case Errc::zero_actual: return "ZeroActual";
    case Errc::config_error: return "ConfigError";
  }
  return "Error";
}

int exit_code(Errc c) noexcept {
  switch (c) {
    case Errc::invalid_spec:
    case Errc::config_error:
      return 1;
    case Errc::non_finite:
      return 3;
    default:
      return 2;
  }
}

}  // namespace nftproj
