# Orbit experiments
