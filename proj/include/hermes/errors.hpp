#pragma once

#include <stdexcept>
#include <string>

namespace hermes {

// Base class for every failure raised by this library. Expected outcomes
// (a translation that exhausts its budget, a race with no winner) are
// modeled as values, not exceptions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Checker subprocess could not be spawned (bad path, missing toolchain).
class SpawnFailure : public Error {
public:
    using Error::Error;
};

// Checker spawned but never answered the readiness probe.
class HandshakeTimeout : public Error {
public:
    using Error::Error;
};

// Checker subprocess died while a request was in flight. The handle is
// dead afterwards and must be replaced.
class CheckerCrashed : public Error {
public:
    using Error::Error;
};

// No checker handle could be started for a batch.
class PoolExhausted : public Error {
public:
    using Error::Error;
};

// A model backend failed after exhausting its retry policy.
class BackendUnavailable : public Error {
public:
    using Error::Error;
};

// Embedding-specific flavour of backend failure, raised by the memory store.
class EmbeddingUnavailable : public BackendUnavailable {
public:
    using BackendUnavailable::BackendUnavailable;
};

// The backend replied, but the reply could not be interpreted (e.g. a tool
// call with unparseable arguments). Surfaced to the caller for a re-ask.
class MalformedReply : public Error {
public:
    using Error::Error;
};

// Scripted double received more calls than its script has items.
class ScriptExhausted : public Error {
public:
    using Error::Error;
};

// Scripted double received input that does not match the next expectation.
class ScriptMismatch : public Error {
public:
    using Error::Error;
};

// The goal of a statement could not be isolated syntactically.
class NegationUnsupported : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DatasetError : public Error {
public:
    using Error::Error;
};

class ParseError : public DatasetError {
public:
    using DatasetError::DatasetError;
};

class EmptyDataset : public DatasetError {
public:
    using DatasetError::DatasetError;
};

} // namespace hermes
