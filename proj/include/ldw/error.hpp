#pragma once

#include <stdexcept>
#include <string>

namespace ldw {

enum class ErrorCode {
    InvalidInput,
    HorizonOutsideImage,
    AboveHorizon,
    NonFinite,
    BehindCamera,
    EmptyGrid,
    NoModel,
    MissingClass,
    NoRoad,
    NoEgoLane,
    DimensionMismatch,
    InsufficientFlow,
    GridMismatch,
    MissingCamera,
    MalformedTruth,
    Config,
    Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ldw
