from django.db import models


class RenderMode(models.TextChoices):
    """How the distance factor of a blended term is evaluated."""
    FULL_PATH = 'full_path', 'Full path (prior path length + view depth)'
    LEGACY = 'legacy', 'Legacy (calibrated depth per Gaussian)'
