#pragma once

#include <stdexcept>
#include <string>

namespace gse {

/// Broad failure category, used by the CLI to pick an exit code:
/// Config -> 1, Data -> 2, Numeric -> 3.
enum class ErrorKind { Config, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidConfig : Error {
  explicit InvalidConfig(const std::string& w) : Error(ErrorKind::Config, w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::Data, w) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& w) : Error(ErrorKind::Data, w) {}
};

struct SampleOutsideDomain : Error {
  explicit SampleOutsideDomain(const std::string& w) : Error(ErrorKind::Data, w) {}
};

/// A query point whose local structure cannot support a rank-q chart.
struct OutsideDomain : Error {
  explicit OutsideDomain(const std::string& w) : Error(ErrorKind::Data, w) {}
};

struct InsufficientNeighbors : Error {
  explicit InsufficientNeighbors(const std::string& w) : Error(ErrorKind::Data, w) {}
};

struct DisconnectedGraph : Error {
  explicit DisconnectedGraph(const std::string& w) : Error(ErrorKind::Data, w) {}
};

struct RankDeficient : Error {
  explicit RankDeficient(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

struct RankCollapse : Error {
  explicit RankCollapse(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

struct IsolatedPoint : Error {
  explicit IsolatedPoint(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

struct EmptyNeighborhood : Error {
  explicit EmptyNeighborhood(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

struct EigensolverFailure : Error {
  explicit EigensolverFailure(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

struct SingularSystem : Error {
  explicit SingularSystem(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

struct RejectionFailure : Error {
  explicit RejectionFailure(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

}  // namespace gse
