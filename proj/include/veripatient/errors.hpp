#pragma once

#include <stdexcept>
#include <string>

namespace veripatient {

/// Document failed structural validation. `path` is a JSON-pointer-ish
/// locator such as "$.demographics.age".
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Source-record ingestion failed; `field` names the offending source field.
class IngestError : public std::runtime_error {
public:
    IngestError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// A terminology lookup found no concept for the queried term.
class NotFoundError : public std::runtime_error {
public:
    explicit NotFoundError(std::string term)
        : std::runtime_error("concept not found: " + term), term_(std::move(term)) {}

    const std::string& term() const { return term_; }

private:
    std::string term_;
};

/// Transport-level failure (network error, replay script exhausted,
/// retries exhausted).
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-2xx backend reply; preserves the response body for diagnosis.
class BackendError : public std::runtime_error {
public:
    BackendError(int status, std::string body)
        : std::runtime_error("backend returned status " + std::to_string(status)),
          status_(status),
          body_(std::move(body)) {}

    int status() const { return status_; }
    const std::string& body() const { return body_; }

private:
    int status_;
    std::string body_;
};

/// Invalid run configuration (missing cache, bad endpoint block, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace veripatient
