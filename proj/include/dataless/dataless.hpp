#pragma once

#include "dataless/augment.hpp"
#include "dataless/classifier.hpp"
#include "dataless/corpus.hpp"
#include "dataless/embedding.hpp"
#include "dataless/errors.hpp"
#include "dataless/evaluate.hpp"
#include "dataless/overlap.hpp"
#include "dataless/pipeline.hpp"
#include "dataless/util.hpp"
