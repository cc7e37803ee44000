#ifndef LEXLEARN_LEXLEARN_HPP
#define LEXLEARN_LEXLEARN_HPP

#include "lexlearn/lexicon.hpp"
#include "lexlearn/evidence.hpp"
#include "lexlearn/em.hpp"
#include "lexlearn/selector.hpp"
#include "lexlearn/baselines.hpp"
#include "lexlearn/sim.hpp"
#include "lexlearn/pipeline.hpp"

#endif  // LEXLEARN_LEXLEARN_HPP
