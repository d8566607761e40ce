#pragma once

#include "efhmm/clustering.hpp"
#include "efhmm/config.hpp"
#include "efhmm/csv.hpp"
#include "efhmm/error.hpp"
#include "efhmm/events.hpp"
#include "efhmm/inference.hpp"
#include "efhmm/metrics.hpp"
#include "efhmm/model.hpp"
#include "efhmm/model_io.hpp"
#include "efhmm/pipeline.hpp"
#include "efhmm/signatures.hpp"
#include "efhmm/synth.hpp"
#include "efhmm/training.hpp"
#include "efhmm/edgecloud/cloud.hpp"
#include "efhmm/edgecloud/edge.hpp"
#include "efhmm/edgecloud/net.hpp"
#include "efhmm/edgecloud/protocol.hpp"
