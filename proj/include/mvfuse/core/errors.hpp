#pragma once

#include <stdexcept>
#include <string>

namespace mvfuse {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& msg) : Error("shape mismatch: " + msg) {}
};

struct EmptyCloud : Error {
    explicit EmptyCloud(const std::string& msg) : Error("empty point cloud: " + msg) {}
};

struct BehindCamera : Error {
    explicit BehindCamera(const std::string& msg) : Error("point behind camera: " + msg) {}
};

struct NonWatertight : Error {
    explicit NonWatertight(const std::string& msg) : Error("mesh not watertight: " + msg) {}
};

struct CameraInsideGrid : Error {
    explicit CameraInsideGrid(const std::string& msg) : Error("camera inside occupied voxel: " + msg) {}
};

struct DegenerateRow : Error {
    explicit DegenerateRow(const std::string& msg) : Error("degenerate row: " + msg) {}
};

struct TimeAtOne : Error {
    explicit TimeAtOne(const std::string& msg) : Error("flow time at terminal value: " + msg) {}
};

struct LatticeMismatch : Error {
    explicit LatticeMismatch(const std::string& msg) : Error("lattice mismatch: " + msg) {}
};

struct NonFinite : Error {
    explicit NonFinite(const std::string& msg) : Error("non-finite value: " + msg) {}
};

struct SpecInvalid : Error {
    explicit SpecInvalid(const std::string& msg) : Error("invalid scene description: " + msg) {}
};

struct CorrespondenceMissing : Error {
    explicit CorrespondenceMissing(const std::string& msg) : Error("missing correspondence: " + msg) {}
};

struct NoViews : Error {
    explicit NoViews(const std::string& msg) : Error("no views: " + msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

}  // namespace mvfuse
