#include "gtpulse/result.hpp"

namespace gtpulse {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::too_short: return "TooShort";
    case Errc::bad_version: return "BadVersion";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::payload_too_large: return "PayloadTooLarge";
    case Errc::negative_interval: return "NegativeInterval";
    case Errc::pending_overflow: return "PendingOverflow";
    case Errc::out_of_order: return "OutOfOrder";
    case Errc::corrupt_record: return "CorruptRecord";
    case Errc::empty_input: return "EmptyInput";
    case Errc::size_mismatch: return "LengthMismatch";
    case Errc::unknown_label: return "UnknownLabel";
    case Errc::degenerate_class: return "DegenerateClass";
    case Errc::invalid_scores: return "InvalidScores";
    case Errc::missing_label_column: return "MissingLabelColumn";
    case Errc::empty_after_cleaning: return "EmptyAfterCleaning";
    case Errc::degenerate_data: return "DegenerateData";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::malformed_report: return "MalformedReport";
    case Errc::unknown_teid: return "UnknownTeid";
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::no_model_loaded: return "NoModelLoaded";
    case Errc::unclassified: return "Unclassified";
    case Errc::endpoint_unreachable: return "EndpointUnreachable";
    case Errc::non_2xx_response: return "Non2xxResponse";
    case Errc::io_error: return "IoError";
    case Errc::bad_config: return "BadConfig";
  }
  return "UnknownError";
}

}  // namespace gtpulse
