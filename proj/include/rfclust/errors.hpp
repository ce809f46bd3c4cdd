/*
 * Copyright 2026 The rfclust Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace rfclust {

// Every failure surfaces as an exception derived from Error; the category
// lets callers (CLI exit codes, HTTP status mapping) react without parsing
// messages.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RFCLUST_ERROR(Name)                   \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

RFCLUST_ERROR(ShapeError);
RFCLUST_ERROR(ParseError);
RFCLUST_ERROR(UsageError);
RFCLUST_ERROR(IoError);
RFCLUST_ERROR(ValidationError);
RFCLUST_ERROR(PreconditionError);
RFCLUST_ERROR(DegenerateDataError);
RFCLUST_ERROR(NumericError);
RFCLUST_ERROR(IndexError);
RFCLUST_ERROR(InsufficientDataError);
RFCLUST_ERROR(RankDeficiencyError);
RFCLUST_ERROR(UndefinedMetricError);
RFCLUST_ERROR(ContractError);
RFCLUST_ERROR(IntegrityError);
RFCLUST_ERROR(NotFoundError);
RFCLUST_ERROR(ConfigError);

#undef RFCLUST_ERROR

}  // namespace rfclust
