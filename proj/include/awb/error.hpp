// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace awb
{

enum class ErrorKind
{
    InvalidChromaticity,
    DegenerateEstimate,
    EmptySet,
    DimensionError,
    IoError,
    EmptyImage,
    InvalidPlan,
    InvalidArgument,
    ParseError,
};

inline std::string_view to_string( ErrorKind kind )
{
    switch ( kind )
    {
        case ErrorKind::InvalidChromaticity: return "InvalidChromaticity";
        case ErrorKind::DegenerateEstimate: return "DegenerateEstimate";
        case ErrorKind::EmptySet: return "EmptySet";
        case ErrorKind::DimensionError: return "DimensionError";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::EmptyImage: return "EmptyImage";
        case ErrorKind::InvalidPlan: return "InvalidPlan";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Single exception type for the library; `kind()` tells callers what went wrong.
class Error : public std::runtime_error
{
public:
    Error( ErrorKind kind, const std::string &what )
        : std::runtime_error( std::string( to_string( kind ) ) + ": " + what )
        , m_kind( kind )
    {}

    ErrorKind kind() const noexcept { return m_kind; }

private:
    ErrorKind m_kind;
};

} // namespace awb
