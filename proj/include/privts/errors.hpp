// Copyright 2026 The privts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace privts {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PRIVTS_DEFINE_ERROR(Name)            \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  };

// Model / tensor engine
PRIVTS_DEFINE_ERROR(ShapeMismatch)
PRIVTS_DEFINE_ERROR(UnsupportedShape)
PRIVTS_DEFINE_ERROR(LabelOutOfRange)
PRIVTS_DEFINE_ERROR(EmptyDataset)

// Data ingestion
PRIVTS_DEFINE_ERROR(MalformedHeader)
PRIVTS_DEFINE_ERROR(RaggedRecord)
PRIVTS_DEFINE_ERROR(UnknownLabel)
PRIVTS_DEFINE_ERROR(ClassTooSmall)
PRIVTS_DEFINE_ERROR(TooManyClients)

// Privacy accounting
PRIVTS_DEFINE_ERROR(InvalidConfig)
PRIVTS_DEFINE_ERROR(NumericalOverflow)

// Secret sharing
PRIVTS_DEFINE_ERROR(OutOfRange)
PRIVTS_DEFINE_ERROR(MissingShare)
PRIVTS_DEFINE_ERROR(PartyMismatch)
PRIVTS_DEFINE_ERROR(TripleReuse)
PRIVTS_DEFINE_ERROR(TransportError)
PRIVTS_DEFINE_ERROR(SampleIdMismatch)
PRIVTS_DEFINE_ERROR(UnsupportedLayer)

// Reporting
PRIVTS_DEFINE_ERROR(ClassCountMismatch)
PRIVTS_DEFINE_ERROR(LengthMismatch)

#undef PRIVTS_DEFINE_ERROR

}  // namespace privts
