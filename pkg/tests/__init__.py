# Tests for persist-check
