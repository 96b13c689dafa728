"""Random cluster model polymer expansions."""
