#pragma once

#include <stdexcept>
#include <string>

namespace fcslam {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FCSLAM_DEFINE_ERROR(Name)            \
  class Name : public Error {                \
   public:                                   \
    explicit Name(const std::string& what)   \
        : Error(std::string(#Name) + ": " + what) {} \
  }

FCSLAM_DEFINE_ERROR(InvalidArgument);
FCSLAM_DEFINE_ERROR(ForestGenerationError);
FCSLAM_DEFINE_ERROR(PoseInsideTree);
FCSLAM_DEFINE_ERROR(DegenerateGeometry);
FCSLAM_DEFINE_ERROR(ClosedSubmap);
FCSLAM_DEFINE_ERROR(MalformedPayload);
FCSLAM_DEFINE_ERROR(DimensionMismatch);
FCSLAM_DEFINE_ERROR(InconsistentSizes);
FCSLAM_DEFINE_ERROR(SingularSystem);
FCSLAM_DEFINE_ERROR(LengthMismatch);
FCSLAM_DEFINE_ERROR(NoFrontiers);
FCSLAM_DEFINE_ERROR(NoPath);
FCSLAM_DEFINE_ERROR(MissingGroundTruth);
FCSLAM_DEFINE_ERROR(ParseError);

#undef FCSLAM_DEFINE_ERROR

}  // namespace fcslam
