#include "ldw/error.hpp"

namespace ldw {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::HorizonOutsideImage: return "HorizonOutsideImage";
        case ErrorCode::AboveHorizon: return "AboveHorizon";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::BehindCamera: return "BehindCamera";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::NoModel: return "NoModel";
        case ErrorCode::MissingClass: return "MissingClass";
        case ErrorCode::NoRoad: return "NoRoad";
        case ErrorCode::NoEgoLane: return "NoEgoLane";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InsufficientFlow: return "InsufficientFlow";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::MissingCamera: return "MissingCamera";
        case ErrorCode::MalformedTruth: return "MalformedTruth";
        case ErrorCode::Config: return "Config";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace ldw
