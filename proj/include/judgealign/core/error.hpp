#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace judgealign {

// Base of every error raised by the library. `code()` is a stable
// machine-readable tag used in rejects files and CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define JUDGEALIGN_DEFINE_ERROR(Name, tag)                        \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(tag, what) {}  \
  };

JUDGEALIGN_DEFINE_ERROR(UnknownModality, "unknown_modality")
JUDGEALIGN_DEFINE_ERROR(EmptyResult, "empty_result")
JUDGEALIGN_DEFINE_ERROR(EmptyDataset, "empty_dataset")
JUDGEALIGN_DEFINE_ERROR(TransportError, "transport_error")
JUDGEALIGN_DEFINE_ERROR(InsufficientSamples, "insufficient_samples")
JUDGEALIGN_DEFINE_ERROR(EmptyAggregation, "empty_aggregation")
JUDGEALIGN_DEFINE_ERROR(EmptyRubric, "empty_rubric")
JUDGEALIGN_DEFINE_ERROR(DimensionMismatch, "dimension_mismatch")
JUDGEALIGN_DEFINE_ERROR(NoLabeledRows, "no_labeled_rows")
JUDGEALIGN_DEFINE_ERROR(SingularSystem, "singular_system")
JUDGEALIGN_DEFINE_ERROR(InvalidStandardError, "invalid_standard_error")
JUDGEALIGN_DEFINE_ERROR(InvalidConfig, "invalid_config")
JUDGEALIGN_DEFINE_ERROR(PreconditionError, "precondition")
JUDGEALIGN_DEFINE_ERROR(FormatError, "format_error")
JUDGEALIGN_DEFINE_ERROR(IoError, "io_error")

#undef JUDGEALIGN_DEFINE_ERROR

class MissingPlaceholder : public Error {
 public:
  explicit MissingPlaceholder(std::string name)
      : Error("missing_placeholder", "unresolved template placeholder: " + name),
        name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// Raised when judgments and pairs cannot be joined one-to-one on pair id.
class JoinMismatch : public Error {
 public:
  explicit JoinMismatch(std::vector<std::string> orphans)
      : Error("join_mismatch", describe(orphans)), orphans_(std::move(orphans)) {}
  const std::vector<std::string>& orphans() const noexcept { return orphans_; }

 private:
  static std::string describe(const std::vector<std::string>& ids) {
    std::string s = "judgments and pairs do not join; orphaned ids:";
    for (const auto& id : ids) s += " " + id;
    return s;
  }
  std::vector<std::string> orphans_;
};

class IncompleteGrid : public Error {
 public:
  explicit IncompleteGrid(std::vector<std::string> missing)
      : Error("incomplete_grid", describe(missing)), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  static std::string describe(const std::vector<std::string>& cells) {
    std::string s = "heatmap grid is incomplete; missing cells:";
    for (const auto& c : cells) s += " " + c;
    return s;
  }
  std::vector<std::string> missing_;
};

// Configuration problem; `field` is a dotted path into the run config.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("config_error", field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class MissingPrerequisite : public Error {
 public:
  explicit MissingPrerequisite(std::string artifact)
      : Error("missing_prerequisite", "missing prerequisite artifact: " + artifact),
        artifact_(std::move(artifact)) {}
  const std::string& artifact() const noexcept { return artifact_; }

 private:
  std::string artifact_;
};

}  // namespace judgealign
