from django.apps import AppConfig


class ChannelsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'thzrrf.apps.channels'
    verbose_name = 'Channel synthesis'
