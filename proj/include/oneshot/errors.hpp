#pragma once

#include <stdexcept>
#include <string>

namespace oneshot {

struct Error : std::runtime_error {
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind(std::move(kind)) {}
    std::string kind;
};

struct NonNestedGrids : Error {
    explicit NonNestedGrids(const std::string& what) : Error("NonNestedGrids", what) {}
};

struct DegenerateReference : Error {
    explicit DegenerateReference(const std::string& what) : Error("DegenerateReference", what) {}
};

struct NotPositiveDefinite : Error {
    explicit NotPositiveDefinite(const std::string& what) : Error("NotPositiveDefinite", what) {}
};

struct BlowUp : Error {
    explicit BlowUp(const std::string& what) : Error("BlowUp", what) {}
};

struct DegenerateCollocation : Error {
    explicit DegenerateCollocation(const std::string& what) : Error("DegenerateCollocation", what) {}
};

struct GridMismatch : Error {
    explicit GridMismatch(const std::string& what) : Error("GridMismatch", what) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& what) : Error("DimensionMismatch", what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

}  // namespace oneshot
