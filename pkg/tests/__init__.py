# Tests for the billiard stability toolkit
