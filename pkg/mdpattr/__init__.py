# Importance explanations for Markov decision processes
