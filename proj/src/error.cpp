#include "simlr/error.hpp"

namespace simlr {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace simlr
