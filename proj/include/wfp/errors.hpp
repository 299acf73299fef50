// errors.hpp - error codes shared across the toolkit
#pragma once

#include <stdexcept>
#include <string>

namespace wfp {

enum class Errc {
    // capture parsing
    UnknownMagic,
    TruncatedBlock,
    LengthMismatch,
    MissingInterface,
    MalformedHeader,
    // dataset
    AmbiguousMatch,
    EmptyAfterFilter,
    ClassTooSmall,
    HeaderMismatch,
    EmptyFile,
    // learners
    DegenerateInput,
    InvalidHyperparameter,
    ArityMismatch,
    Unsupported,
    VersionMismatch,
    CorruptDocument,
    // evaluation
    UnknownLabel,
    GridTooLarge,
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::UnknownMagic:          return "unknown_magic";
    case Errc::TruncatedBlock:        return "truncated_block";
    case Errc::LengthMismatch:        return "length_mismatch";
    case Errc::MissingInterface:      return "missing_interface";
    case Errc::MalformedHeader:       return "malformed_header";
    case Errc::AmbiguousMatch:        return "ambiguous_match";
    case Errc::EmptyAfterFilter:      return "empty_after_filter";
    case Errc::ClassTooSmall:         return "class_too_small";
    case Errc::HeaderMismatch:        return "header_mismatch";
    case Errc::EmptyFile:             return "empty_file";
    case Errc::DegenerateInput:       return "degenerate_input";
    case Errc::InvalidHyperparameter: return "invalid_hyperparameter";
    case Errc::ArityMismatch:         return "arity_mismatch";
    case Errc::Unsupported:           return "unsupported";
    case Errc::VersionMismatch:       return "version_mismatch";
    case Errc::CorruptDocument:       return "corrupt_document";
    case Errc::UnknownLabel:          return "unknown_label";
    case Errc::GridTooLarge:          return "grid_too_large";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
    throw Error(code, what);
}

} // namespace wfp
